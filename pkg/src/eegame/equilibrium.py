"""Analytic uniqueness certificate for the EE game and its Monte Carlo rate.

For link k the certificate is

    alpha_k = rho(H_kk^H H_kk) * ||D R_k||_2 / lambda_min(H_kk^H T_k H_kk)^2,
    T_k = (I + P_T sum_i H_ik H_ik^H)^{-1},

where D R_k = [conj(H_jk) kron H_jk]_{j != k} is the (constant) Jacobian of
the IPN covariance with respect to the other links' covariances. The
equilibrium is unique (and asynchronous play converges) when every
alpha_k < sqrt(1 / (K - 1)).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .channel import ChannelSet, PathLossModel, generate_topology, sample_channels
from .config import NetworkConfig
from .errors import DomainError, RankDeficiencyError

log = logging.getLogger(__name__)

RANK_REL_TOL = 1e-12
PROBABILITY_CSV_HEADER = ("D_cross", "trials", "successes", "probability")


def jacobian_spectral_norm(ch: ChannelSet, k: int, method: str = "gram") -> float:
    """Spectral norm of the Jacobian of R_k with respect to Q_{-k}.

    ``gram`` takes the largest eigenvalue of
    ``sum_{j != k} (conj(H_jk) H_jk^T) kron (H_jk H_jk^H)`` (size N^2);
    ``dense`` assembles the N^2 x sum_j M_j^2 block matrix explicitly.
    """
    K = ch.K
    if K < 2:
        raise DomainError("the interference Jacobian needs at least two links")
    others = [ch.H[j][k] for j in range(K) if j != k]
    if method == "dense":
        J = np.hstack([np.kron(H.conj(), H) for H in others])
        return float(np.linalg.norm(J, 2)) if J.size else 0.0
    if method != "gram":
        raise ValueError(f"unknown method {method!r}")
    N = ch.N
    G = np.zeros((N * N, N * N), dtype=complex)
    for H in others:
        G += np.kron(H.conj() @ H.T, H @ H.conj().T)
    lam_max = np.linalg.eigvalsh(0.5 * (G + G.conj().T))[-1]
    return math.sqrt(max(lam_max, 0.0))


@dataclass(frozen=True)
class AlphaParts:
    alpha: float
    rho_direct: float
    jacobian_norm: float
    lambda_min: float


def compute_alpha(ch: ChannelSet, k: int, P_T_W: float, method: str = "gram") -> AlphaParts:
    """Per-link uniqueness coefficient and the three factors it is built from."""
    H = ch.direct(k)
    N, M = H.shape
    if M == 0:
        return AlphaParts(0.0, 0.0, 0.0, math.inf)
    S = np.zeros((N, N), dtype=complex)
    for i in range(ch.K):
        Hik = ch.H[i][k]
        S += Hik @ Hik.conj().T
    T = np.linalg.inv(np.eye(N) + P_T_W * 0.5 * (S + S.conj().T))
    B = H.conj().T @ T @ H
    eig = np.linalg.eigvalsh(0.5 * (B + B.conj().T))
    rho = float(np.linalg.eigvalsh(H.conj().T @ H)[-1])
    if M > N or eig[0] <= RANK_REL_TOL * max(eig[-1], 0.0) or eig[-1] <= 0.0:
        raise RankDeficiencyError(
            f"direct channel of link {k} is not full column rank; use reduce_general_rank")
    jn = jacobian_spectral_norm(ch, k, method) if ch.K > 1 else 0.0
    lam = float(eig[0])
    return AlphaParts(rho * jn / lam ** 2, rho, jn, lam)


@dataclass(frozen=True)
class UniquenessReport:
    alpha: np.ndarray
    bound: float
    satisfied: bool
    rho_direct: np.ndarray
    jacobian_norm: np.ndarray
    lambda_min: np.ndarray
    full_power_links: tuple = ()

    @property
    def large_power_warning(self) -> bool:
        """True when some link spends its whole budget at the supplied profile."""
        return bool(self.full_power_links)


def check_uniqueness(ch: ChannelSet, P_T_W: float, profile=None,
                     full_power_rtol: float = 1e-6) -> UniquenessReport:
    """Evaluate the certificate on every link.

    The certificate presumes a budget large enough that links do not use
    full power at equilibrium. If ``profile`` (an equilibrium estimate) is
    given, links at full power are listed in ``full_power_links``.
    """
    K = ch.K
    parts = [compute_alpha(ch, k, P_T_W) for k in range(K)]
    alpha = np.array([p.alpha for p in parts])
    bound = math.inf if K == 1 else math.sqrt(1.0 / (K - 1))
    full = ()
    if profile is not None:
        powers = profile.powers()
        full = tuple(int(k) for k in np.flatnonzero(powers >= P_T_W * (1 - full_power_rtol)))
        if full:
            log.warning("links %s use full power; the large-budget premise may not hold", full)
    return UniquenessReport(alpha, bound, bool(np.all(alpha < bound)),
                            np.array([p.rho_direct for p in parts]),
                            np.array([p.jacobian_norm for p in parts]),
                            np.array([p.lambda_min for p in parts]), full)


def reduce_general_rank(ch: ChannelSet, rel_tol: float = RANK_REL_TOL):
    """Project every link onto the row space of its direct channel.

    Returns ``(reduced, bases)`` with ``bases[j]`` the M x r_j matrix of
    right singular vectors of H_jj for nonzero singular values, and reduced
    channels ``H_jk V_j``. A covariance Qbar of the reduced game lifts back as
    ``V Qbar V^H``. Links with a zero direct channel get r_j = 0.
    """
    K = ch.K
    bases = []
    for j in range(K):
        H = ch.direct(j)
        M = H.shape[1]
        if H.size == 0 or not np.any(H):
            bases.append(np.zeros((M, 0), dtype=complex))
            continue
        _, s, Vh = np.linalg.svd(H, full_matrices=False)
        r = int(np.sum(s > rel_tol * s[0]))
        bases.append(Vh[:r].conj().T)
    reduced = ChannelSet(tuple(tuple(ch.H[j][k] @ bases[j] for k in range(K)) for j in range(K)),
                         ch.sigma2_W)
    return reduced, bases


def lift(V: np.ndarray, Qbar: np.ndarray) -> np.ndarray:
    return V @ Qbar @ V.conj().T


def certify(ch: ChannelSet, P_T_W: float) -> bool:
    """Certificate on the rank-reduced channels (no-op for full column rank)."""
    reduced, _ = reduce_general_rank(ch)
    return check_uniqueness(reduced, P_T_W).satisfied


def uniqueness_probability(cfg: NetworkConfig, cross_distances: Sequence[float],
                           trials: int, seed: Optional[int] = None,
                           model: Optional[PathLossModel] = None) -> list:
    """Fraction of random symmetric two-link channels that pass the certificate.

    One fading draw per trial index is reused across all cross distances,
    so each trial's verdict is monotone in the distance. Returns rows
    ``(D_cross, trials, successes, probability)``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if cfg.K != 2:
        raise DomainError("the symmetric sweep is defined for two links")
    seed = cfg.seed if seed is None else seed
    rows = []
    for dc in cross_distances:
        topo = generate_topology(cfg, "symmetric_two_link", cross_dist_m=dc)
        hits = sum(certify(sample_channels(topo, cfg, model, seed=seed, draw=t), cfg.P_T_W)
                   for t in range(trials))
        rows.append((float(dc), trials, hits, hits / trials))
    return rows


def write_probability_csv(rows: Iterable, dest) -> None:
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROBABILITY_CSV_HEADER)
        for dc, n, hits, p in rows:
            w.writerow((repr(float(dc)), n, hits, repr(float(p))))
