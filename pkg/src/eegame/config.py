"""Scenario parameters and the flat key/value config format."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

TOPOLOGIES = ("random_square", "symmetric_two_link")


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    return 10.0 * math.log10(p_w) + 30.0


@dataclass(frozen=True)
class NetworkConfig:
    """All parameters of one network scenario.

    Defaults reproduce the main simulation setup: four 4x4 links, 80 m
    direct links inside a 250 m square, -106 dBm noise, 23 dBm circuit
    power, 30 dBm power budget and path loss ``38.46 + 35 log10(d)``.

    ``topology`` selects random placement or the symmetric two-link layout
    (``cross_dist_m`` is then the common cross distance; ``inf`` removes the
    cross channels entirely).
    """

    K: int = 4
    M: int = 4
    N: int = 4
    P_T_dBm: float = 30.0
    P_C_dBm: float = 23.0
    noise_dBm: float = -106.0
    area_m: float = 250.0
    min_cross_dist_m: float = 35.0
    direct_dist_m: float = 80.0
    pathloss_offset_dB: float = 38.46
    pathloss_slope: float = 35.0
    seed: int = 0
    eps: float = 1e-5
    T_max: int = 20
    topology: str = "random_square"
    cross_dist_m: float = 5.0

    def __post_init__(self):
        for name in ("K", "M", "N"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        for name in ("P_T_dBm", "P_C_dBm", "noise_dBm", "area_m", "direct_dist_m",
                     "min_cross_dist_m", "pathloss_offset_dB", "pathloss_slope", "eps"):
            if not math.isfinite(float(getattr(self, name))):
                raise ConfigError(f"{name} must be finite")
        if self.area_m <= 0 or self.direct_dist_m <= 0 or self.min_cross_dist_m < 0:
            raise ConfigError("distances must be positive")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if not isinstance(self.T_max, int) or self.T_max < 1:
            raise ConfigError("T_max must be a positive integer")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"topology must be one of {TOPOLOGIES}")
        if self.topology == "symmetric_two_link" and self.K != 2:
            raise ConfigError("symmetric_two_link topology requires K = 2")
        if not self.cross_dist_m > 0:
            raise ConfigError("cross_dist_m must be positive (inf allowed)")

    @property
    def P_T_W(self) -> float:
        return dbm_to_watt(self.P_T_dBm)

    @property
    def P_C_W(self) -> float:
        return dbm_to_watt(self.P_C_dBm)

    @property
    def sigma2_W(self) -> float:
        return dbm_to_watt(self.noise_dBm)

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "NetworkConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kwargs = {}
        for name, value in data.items():
            default = known[name].default
            if isinstance(default, bool) or isinstance(value, (list, dict)):
                raise ConfigError(f"{name}: unsupported value {value!r}")
            if isinstance(default, int):
                if isinstance(value, float) and value.is_integer():
                    value = int(value)
                if not isinstance(value, int):
                    raise ConfigError(f"{name} must be an integer")
            elif isinstance(default, float):
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ConfigError(f"{name} must be a number")
                value = float(value)
            elif not isinstance(value, str):
                raise ConfigError(f"{name} must be a string")
            kwargs[name] = value
        return cls(**kwargs)


def read_flat_config(path) -> dict:
    """Parse a flat TOML file (``key = value`` lines, no tables)."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: tables are not allowed ({', '.join(nested)})")
    return data


def load_network_config(path) -> NetworkConfig:
    return NetworkConfig.from_mapping(read_flat_config(path))
