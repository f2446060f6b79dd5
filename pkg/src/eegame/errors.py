"""Exception types raised across the package."""


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class StructuralError(ValueError):
    """Shapes or link indices that do not fit together."""


class InfeasibleGeometryError(RuntimeError):
    """Random placement could not satisfy the distance constraints."""


class InvalidScheduleError(ValueError):
    """An update schedule violates the asynchronous-play assumptions."""


class RankDeficiencyError(ValueError):
    """A direct channel is not full column rank; reduce it first."""


class NonConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap.

    The last iterate is kept on ``last`` so callers can inspect it.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class NumericError(ArithmeticError):
    """A matrix that must be positive definite is not."""
