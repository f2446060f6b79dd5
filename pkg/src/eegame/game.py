"""Asynchronous best-response dynamics for the per-link EE game.

Time runs over ``t = 0..T_max``. At each t the links in their update set
recompute a best response against a possibly stale view of the others'
covariances, ``Q_r(tau_r^k(t))``; everybody else keeps their covariance.
No update at time t ever sees another update from the same t.
"""

from __future__ import annotations

import csv
import io
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .best_response import (
    StrategyProfile,
    dinkelbach_best_response,
    full_power_response,
    link_ee,
    link_rate,
)
from .channel import ChannelSet, interference_covariance
from .config import NetworkConfig
from .errors import InvalidScheduleError, NonConvergenceError, StructuralError
from .rng import crandn, stream

SCHEDULE_KINDS = ("sequential", "simultaneous", "unbalanced", "custom")
TRACE_CSV_HEADER = ("t", "link", "EE_bits_per_Hz_J", "SE_bits_per_s_Hz", "power_W")


@dataclass(frozen=True)
class Schedule:
    """Update times and staleness for asynchronous play.

    ``update_sets[k]`` holds the times in ``0..T_max`` at which link k
    (zero-based) updates. ``lags[t, k, r]`` is ``t - tau_r^k(t)``, i.e. how
    many steps old link r's covariance is when link k looks at it at time t;
    ``None`` means always current.
    """

    kind: str
    K: int
    T_max: int
    update_sets: tuple
    lags: Optional[np.ndarray] = None

    @property
    def staleness_bound(self) -> int:
        return 0 if self.lags is None else int(self.lags.max(initial=0))

    def updates_at(self, t: int) -> list:
        return [k for k in range(self.K) if t in self.update_sets[k]]

    def lag(self, t: int, k: int, r: int) -> int:
        return 0 if self.lags is None else int(self.lags[t, k, r])

    def tau(self, t: int, k: int, r: int) -> int:
        return t - self.lag(t, k, r)


def _validate(schedule: Schedule) -> None:
    K, T = schedule.K, schedule.T_max
    if len(schedule.update_sets) != K:
        raise InvalidScheduleError("need one update set per link")
    for k, times in enumerate(schedule.update_sets):
        if any(not 0 <= t <= T for t in times):
            raise InvalidScheduleError(f"link {k} has update times outside 0..{T}")
        # finite-horizon stand-in for "updates infinitely often"
        if not times or max(times) < T // 2:
            raise InvalidScheduleError(f"link {k} stops updating before t = {T // 2}")
    lags = schedule.lags
    if lags is not None:
        if lags.shape != (T + 1, K, K):
            raise InvalidScheduleError(f"lags must have shape {(T + 1, K, K)}")
        if np.any(lags < 0):
            raise InvalidScheduleError("tau_r^k(t) may not exceed t")
        t = np.arange(T + 1)[:, None, None]
        if np.any(lags > t):
            raise InvalidScheduleError("tau_r^k(t) must be nonnegative")


def make_schedule(kind: str, K: int, T_max: int, params: Optional[dict] = None) -> Schedule:
    """Build one of the standard schedules, or validate a custom one.

    ``sequential``: link k updates at ``{k, K+k, 2K+k, ...}`` (one-based k);
    ``simultaneous``: every link at every t; ``unbalanced``: link k at
    ``{k, 2k, 3k, ...}``. ``custom`` takes ``params["update_sets"]`` and an
    optional ``params["lags"]`` array of shape (T_max+1, K, K).
    """
    if K < 1 or T_max < 1:
        raise InvalidScheduleError("K and T_max must be at least 1")
    times = range(T_max + 1)
    if kind == "sequential":
        sets = tuple(frozenset(t for t in times if t >= 1 and (t - 1) % K == k)
                     for k in range(K))
        return Schedule(kind, K, T_max, sets)
    if kind == "simultaneous":
        return Schedule(kind, K, T_max, tuple(frozenset(times) for _ in range(K)))
    if kind == "unbalanced":
        sets = tuple(frozenset(t for t in times if t >= 1 and t % (k + 1) == 0)
                     for k in range(K))
        return Schedule(kind, K, T_max, sets)
    if kind == "custom":
        params = params or {}
        sets = tuple(frozenset(int(t) for t in s) for s in params["update_sets"])
        lags = params.get("lags")
        if lags is not None:
            lags = np.asarray(lags, dtype=int)
        sched = Schedule(kind, K, T_max, sets, lags)
        _validate(sched)
        return sched
    raise InvalidScheduleError(f"unknown schedule kind {kind!r}")


def random_async_schedule(K: int, T_max: int, p_update: float = 0.5, max_lag: int = 2,
                          seed: int = 0) -> Schedule:
    """Custom schedule with random update instants and bounded random staleness."""
    rng = stream(seed, "init", 10_000)
    active = rng.random((T_max + 1, K)) < p_update
    # every link gets at least one update in each window of 2K steps
    for k in range(K):
        for start in range(0, T_max + 1, 2 * K):
            if not active[start:start + 2 * K, k].any():
                active[min(start + k, T_max), k] = True
        active[T_max, k] |= not active[T_max // 2:, k].any()
    lags = rng.integers(0, max_lag + 1, size=(T_max + 1, K, K))
    lags = np.minimum(lags, np.arange(T_max + 1)[:, None, None])
    sets = [np.flatnonzero(active[:, k]).tolist() for k in range(K)]
    return make_schedule("custom", K, T_max, {"update_sets": sets, "lags": lags})


@dataclass
class GameTrace:
    """History of one run.

    ``ee``, ``se`` and ``power`` have one row per state ``Q(0), Q(1), ...``
    and one column per link.
    """

    ee: np.ndarray
    se: np.ndarray
    power: np.ndarray
    profile: StrategyProfile
    converged: bool
    iters_to_converge: int
    ne_residual: float
    stop_reason: str
    schedule_kind: str = ""

    @property
    def sum_ee(self) -> float:
        return float(self.ee[-1].sum())

    @property
    def sum_se(self) -> float:
        return float(self.se[-1].sum())

    def to_csv(self, dest=None) -> str:
        """Write ``t, link, EE, SE, power`` rows (links one-based)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_CSV_HEADER)
        T, K = self.ee.shape
        for t in range(T):
            for k in range(K):
                w.writerow((t, k + 1, repr(float(self.ee[t, k])), repr(float(self.se[t, k])),
                            repr(float(self.power[t, k]))))
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text


def default_profile(ch: ChannelSet, P_T_W: float) -> StrategyProfile:
    """``Q_k = P_T / (2 M_k) I``: feasible and interior."""
    return StrategyProfile(tuple(np.eye(m, dtype=complex) * (P_T_W / (2 * m)) if m else
                                 np.zeros((0, 0), dtype=complex) for m in ch.tx_dims), P_T_W)


def random_profile(ch: ChannelSet, P_T_W: float, rng: np.random.Generator) -> StrategyProfile:
    """Random feasible profile: Wishart directions, trace uniform in [0, P_T]."""
    Q = []
    for m in ch.tx_dims:
        A = crandn(rng, m, m)
        S = A @ A.conj().T
        tr = np.trace(S).real
        Q.append(S * (rng.uniform(0.0, P_T_W) / tr) if tr > 0 else S)
    return StrategyProfile(tuple(Q), P_T_W)


def link_metrics(ch: ChannelSet, profile: StrategyProfile, P_C_W: float):
    K = ch.K
    se = np.empty(K)
    power = profile.powers()
    for k in range(K):
        R = interference_covariance(ch, profile, k)
        se[k] = link_rate(profile.Q[k], ch.direct(k), R)
    return se / (power + P_C_W), se, power


def _ee_response(cfg: NetworkConfig):
    P_T, P_C, eps = cfg.P_T_W, cfg.P_C_W, cfg.eps

    def respond(H, R):
        return dinkelbach_best_response(H, R, P_T, P_C, eps).Q_star
    return respond


def _se_response(cfg: NetworkConfig):
    P_T = cfg.P_T_W

    def respond(H, R):
        return full_power_response(H, R, P_T)
    return respond


def best_response_map(ch: ChannelSet, profile: StrategyProfile,
                      respond: Callable) -> StrategyProfile:
    """Joint map F(Q): every link's best response to the others in ``profile``."""
    return StrategyProfile(tuple(respond(ch.direct(k), interference_covariance(ch, profile, k))
                                 for k in range(ch.K)), profile.P_T_W)


def _block_dist(a: StrategyProfile, b: StrategyProfile) -> np.ndarray:
    return np.array([np.linalg.norm(x - y) for x, y in zip(a.Q, b.Q)])


def _run(ch: ChannelSet, schedule: Schedule, cfg: NetworkConfig,
         Q_init: Optional[StrategyProfile], respond: Callable,
         conv_tol: Optional[float]) -> GameTrace:
    K = ch.K
    if schedule.K != K:
        raise StructuralError(f"schedule is for {schedule.K} links, channels have {K}")
    P_T, P_C = cfg.P_T_W, cfg.P_C_W
    if Q_init is None:
        Q_init = default_profile(ch, P_T)
    Q_init.check_feasible()
    tol = 1e-6 * P_T if conv_tol is None else conv_tol

    history = deque([Q_init], maxlen=schedule.staleness_bound + 1)
    ee, se, pw = link_metrics(ch, Q_init, P_C)
    rows_ee, rows_se, rows_pw = [ee], [se], [pw]

    round_start, round_profile, pending = 0, Q_init, set(range(K))
    converged, iters, reason = False, schedule.T_max + 1, "T_max"
    for t in range(schedule.T_max + 1):
        current = history[-1]
        new_Q = list(current.Q)
        movers = schedule.updates_at(t)
        for k in movers:
            seen = [history[-1 - schedule.lag(t, k, r)].Q[r] if r != k else current.Q[k]
                    for r in range(K)]
            R = interference_covariance(ch, seen, k)
            try:
                new_Q[k] = respond(ch.direct(k), R)
            except NonConvergenceError as exc:
                raise NonConvergenceError(f"link {k} at t={t}: {exc}", last=exc.last) from exc
        nxt = StrategyProfile(tuple(new_Q), P_T)
        history.append(nxt)
        ee, se, pw = link_metrics(ch, nxt, P_C)
        rows_ee.append(ee)
        rows_se.append(se)
        rows_pw.append(pw)

        pending.difference_update(movers)
        if not pending:
            if _block_dist(nxt, round_profile).max() <= tol:
                converged, iters, reason = True, round_start, "converged"
                break
            round_start, round_profile, pending = t + 1, nxt, set(range(K))

    final = history[-1]
    fixed = best_response_map(ch, final, respond)
    return GameTrace(np.array(rows_ee), np.array(rows_se), np.array(rows_pw), final, converged,
                     iters, float(_block_dist(fixed, final).max()), reason, schedule.kind)


def run_adee(ch: ChannelSet, schedule: Schedule, cfg: NetworkConfig,
             Q_init: Optional[StrategyProfile] = None,
             conv_tol: Optional[float] = None) -> GameTrace:
    """Asynchronous distributed EE dynamics: each update is a Dinkelbach best response.

    Stops when a full round (every link updated at least once) changes no
    covariance by more than ``conv_tol`` (default ``1e-6 P_T``) in Frobenius
    norm, or at ``T_max``. ``iters_to_converge`` is the start time of that
    quiet round.
    """
    return _run(ch, schedule, cfg, Q_init, _ee_response(cfg), conv_tol)


def run_adse(ch: ChannelSet, schedule: Schedule, cfg: NetworkConfig,
             Q_init: Optional[StrategyProfile] = None,
             conv_tol: Optional[float] = None) -> GameTrace:
    """Same loop with full-power rate-maximizing water-filling updates."""
    return _run(ch, schedule, cfg, Q_init, _se_response(cfg), conv_tol)


@dataclass(frozen=True)
class NEReport:
    is_ne: bool
    residual: np.ndarray
    gap: np.ndarray
    responses: StrategyProfile


def verify_ne(ch: ChannelSet, profile: StrategyProfile, cfg: NetworkConfig,
              eps_ne: float = 1e-5) -> NEReport:
    """Check that no link gains more than ``eps_ne`` EE by deviating unilaterally."""
    respond = _ee_response(cfg)
    P_C = cfg.P_C_W
    F = best_response_map(ch, profile, respond)
    gap = np.empty(ch.K)
    for k in range(ch.K):
        R = interference_covariance(ch, profile, k)
        H = ch.direct(k)
        gap[k] = link_ee(F.Q[k], H, R, P_C) - link_ee(profile.Q[k], H, R, P_C)
    residual = _block_dist(F, profile)
    return NEReport(bool(gap.max() <= eps_ne), residual, gap, F)


def estimate_contraction(ch: ChannelSet, cfg: NetworkConfig, n_pairs: int = 50,
                         seed: int = 0, response: str = "ee") -> float:
    """Largest observed ``||F(Q1) - F(Q2)||_block / ||Q1 - Q2||_block``.

    The block norm is the maximum over links of the per-link Frobenius norm.
    Pairs with identical profiles are skipped.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be at least 1")
    respond = _ee_response(cfg) if response == "ee" else _se_response(cfg)
    rng = stream(seed, "contraction")
    P_T = cfg.P_T_W
    worst = 0.0
    for _ in range(n_pairs):
        Q1, Q2 = random_profile(ch, P_T, rng), random_profile(ch, P_T, rng)
        denom = _block_dist(Q1, Q2).max()
        if denom == 0.0:
            continue
        num = _block_dist(best_response_map(ch, Q1, respond),
                          best_response_map(ch, Q2, respond)).max()
        worst = max(worst, num / denom)
    return worst


def contraction_ratio(ch: ChannelSet, cfg: NetworkConfig, Q1: StrategyProfile,
                      Q2: StrategyProfile) -> Optional[float]:
    """Block-norm ratio for one given pair; ``None`` when the pair coincides."""
    denom = _block_dist(Q1, Q2).max()
    if denom == 0.0:
        return None
    respond = _ee_response(cfg)
    return float(_block_dist(best_response_map(ch, Q1, respond),
                             best_response_map(ch, Q2, respond)).max() / denom)
