"""Per-link energy-efficiency best response.

For fixed interference a link maximizes ``C(Q) / (tr Q + P_C)``. Dinkelbach's
method turns the ratio into a sequence of subtractive problems
``max C(Q) - kappa (tr Q + P_C)``, each solved in closed form by
water-filling over the eigenmodes of ``H^H R^{-1} H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, NonConvergenceError, NumericError, StructuralError

LN2 = math.log(2.0)
EVD_REL_TOL = 1e-12


def hermitize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True)
class StrategyProfile:
    """One transmit covariance per link, all sharing the trace budget ``P_T_W``."""

    Q: tuple
    P_T_W: float

    def __post_init__(self):
        object.__setattr__(self, "Q", tuple(np.asarray(q, dtype=complex) for q in self.Q))

    @property
    def K(self) -> int:
        return len(self.Q)

    def powers(self) -> np.ndarray:
        return np.array([np.trace(q).real for q in self.Q])

    def replace_link(self, k: int, Qk: np.ndarray) -> "StrategyProfile":
        Q = list(self.Q)
        Q[k] = Qk
        return StrategyProfile(tuple(Q), self.P_T_W)

    def check_feasible(self, herm_tol: float = 1e-10, psd_tol: float = 1e-10,
                       trace_tol: float = 1e-9) -> None:
        """Raise ``DomainError`` unless every Q_k is Hermitian PSD within budget."""
        for k, q in enumerate(self.Q):
            if q.ndim != 2 or q.shape[0] != q.shape[1]:
                raise StructuralError(f"Q[{k}] is not square: {q.shape}")
            if q.size == 0:
                continue
            if np.max(np.abs(q - q.conj().T)) > herm_tol:
                raise DomainError(f"Q[{k}] is not Hermitian")
            if np.linalg.eigvalsh(hermitize(q))[0] < -psd_tol:
                raise DomainError(f"Q[{k}] is not positive semidefinite")
            if np.trace(q).real > self.P_T_W + trace_tol:
                raise DomainError(f"Q[{k}] exceeds the power budget")

    def is_feasible(self, **tols) -> bool:
        try:
            self.check_feasible(**tols)
        except (DomainError, StructuralError):
            return False
        return True


@dataclass(frozen=True)
class BestResponseResult:
    """Outcome of one Dinkelbach solve.

    ``kappa_star`` is the energy efficiency achieved by ``Q_star``;
    ``G`` is the Dinkelbach residual at the last parameter ``kappa_history[-1]``.
    """

    Q_star: np.ndarray
    kappa_star: float
    rate: float
    power: float
    dinkelbach_iters: int
    G: float = 0.0
    multiplier: float = 0.0
    kappa_history: tuple = field(default_factory=tuple)


def _chol_logdet2(A: np.ndarray) -> float:
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError("matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log(np.abs(np.diag(L))))) / LN2


def link_rate(Q: np.ndarray, H: np.ndarray, R: np.ndarray) -> float:
    """Spectral efficiency ``log2 det(I + H^H R^{-1} H Q)`` in bits/s/Hz.

    Evaluated as ``log2 det(R + H Q H^H) - log2 det(R)`` so both
    determinants are of Hermitian positive definite matrices.
    """
    R = hermitize(np.asarray(R, dtype=complex))
    base = _chol_logdet2(R)
    if H.size == 0 or not np.any(Q):
        return 0.0
    return max(_chol_logdet2(hermitize(R + H @ Q @ H.conj().T)) - base, 0.0)


def link_ee(Q: np.ndarray, H: np.ndarray, R: np.ndarray, P_C_W: float) -> float:
    """Energy efficiency in bits/Hz/Joule."""
    denom = float(np.trace(Q).real) + P_C_W
    if denom <= 0.0:
        raise DomainError("total consumed power must be positive")
    return link_rate(Q, H, R) / denom


def effective_channel_evd(H: np.ndarray, R: np.ndarray, rel_tol: float = EVD_REL_TOL):
    """Eigenmodes of ``H^H R^{-1} H``.

    Returns ``(U, d)``: U is M x r with orthonormal columns and d holds the r
    eigenvalues above ``rel_tol * d_max``, in descending order.
    """
    R = hermitize(np.asarray(R, dtype=complex))
    M = H.shape[1]
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError as exc:
        raise NumericError("IPN covariance is not positive definite") from exc
    W = np.linalg.solve(L, H)  # L^{-1} H, so W^H W = H^H R^{-1} H
    A = hermitize(W.conj().T @ W)
    if M == 0 or not np.any(A):
        return np.zeros((M, 0), dtype=complex), np.zeros(0)
    lam, V = np.linalg.eigh(A)
    lam, V = lam[::-1], V[:, ::-1]
    keep = lam > rel_tol * lam[0]
    return V[:, keep], lam[keep].copy()


def waterfill(d: Sequence[float], kappa: float, P_T_W: float):
    """Stream powers ``q_m = [1/((kappa+lam) ln2) - 1/d_m]^+`` and multiplier lam.

    ``lam = 0`` when the kappa-only water level already fits the budget;
    otherwise the level is set so the budget binds exactly.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise DomainError("eigenvalues must be positive")
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    if P_T_W < 0:
        raise DomainError("power budget must be nonnegative")
    if d.size == 0:
        return np.zeros(0), 0.0
    if kappa == 0 and math.isinf(P_T_W):
        raise DomainError("kappa = 0 with an infinite budget is unbounded")

    inv = 1.0 / d
    if kappa > 0:
        q = np.maximum(1.0 / (kappa * LN2) - inv, 0.0)
        if q.sum() <= P_T_W:
            return q, 0.0
    if P_T_W == 0:
        return np.zeros_like(d), max(d.max() / LN2 - kappa, 0.0)

    # exact budget-binding level: largest active set whose level clears 1/d_l
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    csum = np.cumsum(inv_sorted)
    level = inv_sorted[0] + P_T_W
    for l in range(inv_sorted.size, 0, -1):
        mu = (P_T_W + csum[l - 1]) / l
        if mu > inv_sorted[l - 1]:
            level = mu
            break
    q = np.maximum(level - inv, 0.0)
    lam = max(1.0 / (level * LN2) - kappa, 0.0)
    return q, lam


def _assemble(U: np.ndarray, q: np.ndarray) -> np.ndarray:
    return hermitize((U * q) @ U.conj().T)


def inner_solve(H: np.ndarray, R: np.ndarray, kappa: float, P_T_W: float) -> np.ndarray:
    """Maximizer of ``C(Q) - kappa tr(Q)`` over the admissible set."""
    U, d = effective_channel_evd(H, R)
    if d.size == 0:
        return np.zeros((H.shape[1], H.shape[1]), dtype=complex)
    q, _ = waterfill(d, kappa, P_T_W)
    return _assemble(U, q)


def dinkelbach_best_response(H: np.ndarray, R: np.ndarray, P_T_W: float, P_C_W: float,
                             eps: float = 1e-5, max_iter: int = 100,
                             kappa0: Optional[float] = None) -> BestResponseResult:
    """EE-maximizing covariance for a link facing IPN covariance ``R``.

    Starts from ``kappa0 = 0`` (where ``G >= 0`` trivially). With an infinite
    budget the start is instead the EE of a single-stream point, which also
    has ``G >= 0`` and keeps the subproblem bounded. Iterates
    ``kappa <- C / (P + P_C)`` until ``|G(kappa)| <= eps``.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if P_C_W <= 0:
        raise DomainError("circuit power must be positive")
    M = H.shape[1]
    U, d = effective_channel_evd(H, R)
    if d.size == 0:
        return BestResponseResult(np.zeros((M, M), dtype=complex), 0.0, 0.0, 0.0, 0)

    if kappa0 is None:
        if math.isinf(P_T_W):
            p = P_C_W
            kappa0 = math.log2(1.0 + d[0] * p) / (p + P_C_W)
        else:
            kappa0 = 0.0
    kappa = float(kappa0)
    history = [kappa]
    for n in range(max_iter + 1):
        q, lam = waterfill(d, kappa, P_T_W)
        rate = float(np.sum(np.log2(1.0 + d * q)))
        power = float(q.sum())
        G = rate - kappa * (power + P_C_W)
        if abs(G) <= eps:
            Q = _assemble(U, q)
            return BestResponseResult(Q, rate / (power + P_C_W), rate, power, n, G, lam,
                                      tuple(history))
        kappa = rate / (power + P_C_W)
        history.append(kappa)
    raise NonConvergenceError(
        f"Dinkelbach did not reach |G| <= {eps} in {max_iter} iterations",
        last=BestResponseResult(_assemble(U, q), rate / (power + P_C_W), rate, power,
                                max_iter, G, lam, tuple(history)))


def full_power_response(H: np.ndarray, R: np.ndarray, P_T_W: float) -> np.ndarray:
    """Rate-maximizing covariance using the whole budget (kappa = 0)."""
    return inner_solve(H, R, 0.0, P_T_W)
