"""Network topologies, path loss, Rayleigh channels and IPN covariances."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import NetworkConfig
from .errors import DomainError, InfeasibleGeometryError, StructuralError
from .rng import crandn, stream

MAX_PLACEMENT_RETRIES = 10_000


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss ``offset_dB + slope * log10(d)``."""

    offset_dB: float
    slope: float

    @classmethod
    def urban(cls) -> "PathLossModel":
        """Default ``38.46 + 35 log10(d)`` model."""
        return cls(38.46, 35.0)

    @classmethod
    def exponent(cls, gamma: float) -> "PathLossModel":
        return cls(0.0, 10.0 * gamma)

    @classmethod
    def from_config(cls, cfg: NetworkConfig) -> "PathLossModel":
        return cls(cfg.pathloss_offset_dB, cfg.pathloss_slope)

    def gain(self, d_m: float) -> float:
        """Linear power gain; zero at infinite distance."""
        loss = path_loss_dB(d_m, self)
        return 0.0 if math.isinf(loss) else 10.0 ** (-loss / 10.0)


def path_loss_dB(d_m: float, model: PathLossModel = PathLossModel.urban()) -> float:
    if not d_m > 0:
        raise DomainError(f"distance must be positive, got {d_m}")
    if math.isinf(d_m):
        return math.inf
    return model.offset_dB + model.slope * math.log10(d_m)


@dataclass(frozen=True)
class Topology:
    """Link geometry; ``dist[j, k]`` is transmitter j to receiver k in meters.

    Symmetric layouts are defined by distances alone, so their positions are
    ``None``.
    """

    dist: np.ndarray
    tx_pos: Optional[np.ndarray] = None
    rx_pos: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return self.dist.shape[0]


def _pairwise(tx: np.ndarray, rx: np.ndarray) -> np.ndarray:
    return np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=-1)


def generate_topology(cfg: NetworkConfig, mode: Optional[str] = None, *,
                      cross_dist_m: Optional[float] = None, seed: Optional[int] = None,
                      draw: int = 0) -> Topology:
    """Place the K links.

    ``random_square`` drops transmitters uniformly in the square and each
    receiver at ``direct_dist_m`` from its transmitter at a uniform angle;
    the whole layout is redrawn until every receiver is inside the square
    and every cross distance is at least ``min_cross_dist_m``.
    ``symmetric_two_link`` sets every direct distance to ``direct_dist_m``
    and both cross distances to ``cross_dist_m``.
    """
    mode = mode or cfg.topology
    if mode == "symmetric_two_link":
        if cfg.K != 2:
            raise StructuralError("symmetric_two_link requires K = 2")
        dc = cfg.cross_dist_m if cross_dist_m is None else cross_dist_m
        if not dc > 0:
            raise DomainError("cross distance must be positive")
        dd = cfg.direct_dist_m
        return Topology(dist=np.array([[dd, dc], [dc, dd]], dtype=float))
    if mode != "random_square":
        raise ValueError(f"unknown topology mode {mode!r}")

    rng = stream(cfg.seed if seed is None else seed, "topology", draw)
    K, side = cfg.K, cfg.area_m
    off_diag = ~np.eye(K, dtype=bool)
    for _ in range(MAX_PLACEMENT_RETRIES):
        tx = rng.uniform(0.0, side, size=(K, 2))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=K)
        rx = tx + cfg.direct_dist_m * np.column_stack([np.cos(theta), np.sin(theta)])
        if np.any(rx < 0.0) or np.any(rx > side):
            continue
        dist = _pairwise(tx, rx)
        if K == 1 or np.all(dist[off_diag] >= cfg.min_cross_dist_m):
            # exact direct distance, free of round-off
            np.fill_diagonal(dist, cfg.direct_dist_m)
            return Topology(dist=dist, tx_pos=tx, rx_pos=rx)
    raise InfeasibleGeometryError(
        f"no placement of {K} links met the constraints after {MAX_PLACEMENT_RETRIES} tries")


@dataclass(frozen=True)
class ChannelSet:
    """Noise-normalized channels; ``H[j][k]`` is the matrix tx j -> rx k.

    All receivers share N antennas. Transmitter widths may differ per link
    (``tx_dims``), which happens after rank reduction.
    """

    H: tuple
    sigma2_W: float = 1.0

    def __post_init__(self):
        grid = tuple(tuple(np.asarray(b, dtype=complex) for b in row) for row in self.H)
        object.__setattr__(self, "H", grid)
        K = len(grid)
        if K == 0 or any(len(row) != K for row in grid):
            raise StructuralError("H must be a non-empty K x K grid")
        N = grid[0][0].shape[0]
        for j in range(K):
            Mj = grid[j][j].shape[1] if grid[j][j].ndim == 2 else -1
            for k in range(K):
                b = grid[j][k]
                if b.ndim != 2 or b.shape != (N, Mj):
                    raise StructuralError(f"H[{j}][{k}] has shape {b.shape}, expected {(N, Mj)}")
                if not np.all(np.isfinite(b)):
                    raise StructuralError("channel entries must be finite")

    @property
    def K(self) -> int:
        return len(self.H)

    @property
    def N(self) -> int:
        return self.H[0][0].shape[0]

    @property
    def tx_dims(self) -> tuple:
        return tuple(self.H[j][j].shape[1] for j in range(self.K))

    @property
    def M(self) -> int:
        dims = set(self.tx_dims)
        if len(dims) != 1:
            raise StructuralError(f"transmit widths differ across links: {self.tx_dims}")
        return dims.pop()

    def direct(self, k: int) -> np.ndarray:
        return self.H[k][k]

    def scaled_cross(self, factor: float) -> "ChannelSet":
        """Copy with every cross channel multiplied by ``factor``."""
        K = self.K
        return ChannelSet(tuple(tuple(self.H[j][k] * (1.0 if j == k else factor)
                                      for k in range(K)) for j in range(K)), self.sigma2_W)


def sample_channels(topology: Topology, cfg: NetworkConfig,
                    model: Optional[PathLossModel] = None, seed: Optional[int] = None,
                    draw: int = 0) -> ChannelSet:
    """Rayleigh channels scaled by path gain and divided by the noise std."""
    K = cfg.K
    if topology.K != K:
        raise StructuralError(f"topology has {topology.K} links, config has {K}")
    model = model or PathLossModel.from_config(cfg)
    rng = stream(cfg.seed if seed is None else seed, "fading", draw)
    fading = crandn(rng, K, K, cfg.N, cfg.M)
    sigma2 = cfg.sigma2_W
    gains = np.array([[model.gain(topology.dist[j, k]) for k in range(K)] for j in range(K)])
    scale = np.sqrt(gains / sigma2)
    H = fading * scale[:, :, None, None]
    return ChannelSet(tuple(tuple(H[j, k] for k in range(K)) for j in range(K)), sigma2)


def interference_covariance(ch: ChannelSet, profile, k: int) -> np.ndarray:
    """IPN covariance ``I + sum_{j != k} H[j,k] Q_j H[j,k]^H`` at receiver k."""
    Q = getattr(profile, "Q", profile)
    K, N = ch.K, ch.N
    if len(Q) != K:
        raise StructuralError(f"profile has {len(Q)} links, channels have {K}")
    if not 0 <= k < K:
        raise StructuralError(f"link index {k} out of range")
    R = np.eye(N, dtype=complex)
    for j in range(K):
        if j == k:
            continue
        Hjk = ch.H[j][k]
        Mj = Hjk.shape[1]
        if np.shape(Q[j]) != (Mj, Mj):
            raise StructuralError(f"Q[{j}] has shape {np.shape(Q[j])}, expected {(Mj, Mj)}")
        R += Hjk @ Q[j] @ Hjk.conj().T
    return 0.5 * (R + R.conj().T)
