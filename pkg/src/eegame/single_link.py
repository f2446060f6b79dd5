"""Closed-form SE/EE of an interference-free link as a function of its power.

With eigenvalues d_1 >= ... >= d_r of H^H H, water-filling a total power P
activates l streams on the segment [g_l, g_{l+1}), where
``g_l = l / d_l - sum_{m<=l} 1/d_m`` (so g_1 = 0, g_{r+1} = inf), and

    C(P) = sum_{m<=l} log2( d_m / l * (P + sum_{m<=l} 1/d_m) ).

C is continuous, strictly increasing and strictly concave with a continuous
first derivative. The EE-optimal power solves
``f(P) = (C(P) - P C'(P)) / C'(P) = P_C`` with f strictly increasing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError

LN2 = math.log(2.0)
CIRCUIT_SWEEP_CSV_HEADER = ("P_C_W", "P_star_W", "SE", "EE")


@dataclass(frozen=True)
class Spectrum:
    d: tuple

    def __post_init__(self):
        d = tuple(float(x) for x in self.d)
        if not d:
            raise DomainError("spectrum needs at least one eigenvalue")
        if any(not x > 0 or not math.isfinite(x) for x in d):
            raise DomainError("eigenvalues must be positive and finite")
        if any(a < b for a, b in zip(d, d[1:])):
            raise DomainError("eigenvalues must be sorted in descending order")
        object.__setattr__(self, "d", d)

    @classmethod
    def from_channel(cls, H: np.ndarray, rel_tol: float = 1e-12) -> "Spectrum":
        lam = np.linalg.eigvalsh(H.conj().T @ H)[::-1]
        return cls(tuple(lam[lam > rel_tol * lam[0]]))

    @property
    def r(self) -> int:
        return len(self.d)

    @property
    def g(self) -> np.ndarray:
        return breakpoints(self.d)


def _as_spectrum(spec) -> Spectrum:
    return spec if isinstance(spec, Spectrum) else Spectrum(tuple(spec))


def breakpoints(d: Sequence[float]) -> np.ndarray:
    """Powers at which the l-th stream switches on; last entry is ``inf``."""
    d = np.asarray(_as_spectrum(d).d)
    ls = np.arange(1, d.size + 1)
    g = ls / d - np.cumsum(1.0 / d)
    g[0] = 0.0
    return np.append(g, math.inf)


def _segment(spec: Spectrum, P: float) -> int:
    if P < 0:
        raise DomainError("power must be nonnegative")
    g = breakpoints(spec.d)
    # largest l with g_l <= P; zero-width segments are skipped automatically
    return int(np.searchsorted(g, P, side="right"))


def _partial_inv(spec: Spectrum, l: int) -> float:
    return float(sum(1.0 / x for x in spec.d[:l]))


def se_on_segment(spec, P: float, l: int) -> float:
    """Segment-l formula evaluated at P (valid on [g_l, g_{l+1}])."""
    spec = _as_spectrum(spec)
    s = _partial_inv(spec, l)
    return float(sum(math.log2(dm / l * (P + s)) for dm in spec.d[:l]))


def se_closed_form(spec, P: float):
    """``(C(P), l)``: spectral efficiency and number of active streams."""
    spec = _as_spectrum(spec)
    l = _segment(spec, P)
    return se_on_segment(spec, P, l), l


def se_derivative(spec, P: float) -> float:
    spec = _as_spectrum(spec)
    l = _segment(spec, P)
    return l / (LN2 * (P + _partial_inv(spec, l)))


def se_second_derivative(spec, P: float) -> float:
    """Valid strictly inside a segment; C'' jumps at the breakpoints."""
    spec = _as_spectrum(spec)
    l = _segment(spec, P)
    return -l / (LN2 * (P + _partial_inv(spec, l)) ** 2)


def first_order_lhs(spec, P: float) -> float:
    """f(P) = (C - P C') / C'; the EE optimum sits where f(P) = P_C."""
    spec = _as_spectrum(spec)
    C, _ = se_closed_form(spec, P)
    dC = se_derivative(spec, P)
    return (C - P * dC) / dC


def optimal_ee_power(spec, P_C_W: float, P_T_W: Optional[float] = None,
                     rtol: float = 1e-10):
    """EE-maximizing power ``(P*, EE*, SE*)``.

    Without a budget this is the root of f(P) = P_C, found by bisection
    after doubling the upper bracket. With a budget the root is clamped to
    ``P_T_W`` (EE is unimodal in P).
    """
    spec = _as_spectrum(spec)
    if not P_C_W > 0:
        raise DomainError("circuit power must be positive")
    lo, hi = 0.0, 1.0 / spec.d[0]
    while first_order_lhs(spec, hi) <= P_C_W:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if first_order_lhs(spec, mid) < P_C_W:
            lo = mid
        else:
            hi = mid
    P = 0.5 * (lo + hi)
    if P_T_W is not None:
        P = min(P, P_T_W)
    C, _ = se_closed_form(spec, P)
    return P, C / (P + P_C_W), C


def symmetric_high_power_limit(alpha_sym: float, K: int) -> float:
    """Sum-SE ceiling ``K log2(1 + 1/(alpha^2 (K-1)))`` of full-power play
    in the symmetric network with cross channels ``alpha * H``."""
    if K < 2:
        raise DomainError("the symmetric limit needs K >= 2")
    if not alpha_sym > 0:
        raise DomainError("alpha must be positive")
    if math.isinf(alpha_sym):
        return 0.0
    return K * math.log2(1.0 + 1.0 / (alpha_sym ** 2 * (K - 1)))


@dataclass(frozen=True)
class LowPowerReport:
    full_power_used: bool
    ee_slope_at_zero: float
    unconstrained_optimum_W: float


def low_power_regime_check(spec, P_C_W: float, P_T_W: float) -> LowPowerReport:
    """EE slope at zero power, ``d_1 / (ln2 P_C)``, and whether the budget binds."""
    spec = _as_spectrum(spec)
    P_opt, _, _ = optimal_ee_power(spec, P_C_W)
    return LowPowerReport(P_opt >= P_T_W, spec.d[0] / (LN2 * P_C_W), P_opt)


def circuit_power_sweep(spec, P_C_values: Iterable[float], P_T_W: Optional[float] = None):
    """Rows ``(P_C_W, P_star_W, SE, EE)``; a finite ``P_T_W`` clamps P*."""
    rows = []
    for pc in P_C_values:
        P, ee, se = optimal_ee_power(spec, pc, P_T_W)
        rows.append((float(pc), P, se, ee))
    return rows


def write_sweep_csv(rows, dest) -> None:
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CIRCUIT_SWEEP_CSV_HEADER)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
