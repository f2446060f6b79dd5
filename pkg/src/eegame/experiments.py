"""Scenario sweeps: run the engines over channel draws and aggregate sum metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .channel import generate_topology, sample_channels
from .config import NetworkConfig, read_flat_config
from .errors import ConfigError, NonConvergenceError
from .game import make_schedule, run_adee, run_adse

SWEEP_PARAMS = ("none", "P_T_dBm", "P_C_dBm", "antennas", "D_direct", "K", "D_cross")
ALGORITHMS = ("ADEE", "ADSE")
SCHEDULES = ("sequential", "simultaneous", "unbalanced")
SWEEP_CSV_HEADER = ("sweep_value", "algorithm", "schedule", "sum_EE", "sum_SE", "mean_iters",
                    "conv_frac")
_ENGINES = {"ADEE": run_adee, "ADSE": run_adse}


@dataclass(frozen=True)
class ScenarioSpec:
    """A sweep over one parameter, for some algorithms and schedules.

    ``sweep_values`` must be sorted ascending; with ``sweep="none"`` it is
    ignored and a single point (``nan`` sweep value) is run.
    """

    base: NetworkConfig = field(default_factory=NetworkConfig)
    sweep: str = "none"
    sweep_values: tuple = ()
    algorithms: tuple = ("ADEE",)
    schedules: tuple = ("sequential",)
    n_channel_draws: int = 50
    output_path: str = "scenario.csv"
    name: str = "scenario"
    cross_distances: tuple = ()
    trials: int = 2000

    def __post_init__(self):
        for name in ("sweep_values", "algorithms", "schedules", "cross_distances"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.sweep not in SWEEP_PARAMS:
            raise ConfigError(f"sweep must be one of {SWEEP_PARAMS}, got {self.sweep!r}")
        if self.sweep != "none":
            if not self.sweep_values:
                raise ConfigError("sweep_values must be nonempty")
            if list(self.sweep_values) != sorted(self.sweep_values):
                raise ConfigError("sweep_values must be sorted ascending")
            if self.sweep == "D_cross" and self.base.topology != "symmetric_two_link":
                raise ConfigError("a D_cross sweep needs the symmetric_two_link topology")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ConfigError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        if not self.schedules or any(s not in SCHEDULES for s in self.schedules):
            raise ConfigError(f"schedules must be a nonempty subset of {SCHEDULES}")
        if not isinstance(self.n_channel_draws, int) or self.n_channel_draws < 1:
            raise ConfigError("n_channel_draws must be a positive integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ConfigError("trials must be a positive integer")

    def points(self) -> list:
        """``(sweep_value, NetworkConfig)`` for every sweep point."""
        if self.sweep == "none":
            return [(math.nan, self.base)]
        return [(float(v), apply_sweep(self.base, self.sweep, v)) for v in self.sweep_values]


def apply_sweep(cfg: NetworkConfig, param: str, value) -> NetworkConfig:
    if param == "P_T_dBm":
        return cfg.with_(P_T_dBm=float(value))
    if param == "P_C_dBm":
        return cfg.with_(P_C_dBm=float(value))
    if param == "antennas":
        return cfg.with_(M=_as_int(value), N=_as_int(value))
    if param == "D_direct":
        return cfg.with_(direct_dist_m=float(value))
    if param == "K":
        return cfg.with_(K=_as_int(value))
    if param == "D_cross":
        return cfg.with_(cross_dist_m=float(value))
    if param == "none":
        return cfg
    raise ConfigError(f"unknown sweep parameter {param!r}")


def _as_int(value) -> int:
    if float(value) != int(value):
        raise ConfigError(f"expected an integer sweep value, got {value!r}")
    return int(value)


_SCENARIO_KEYS = {f.name for f in fields(ScenarioSpec)} - {"base"}


def scenario_from_mapping(data: dict, name: Optional[str] = None) -> ScenarioSpec:
    """Split a flat mapping into network keys and scenario keys."""
    scen = {k: v for k, v in data.items() if k in _SCENARIO_KEYS}
    net = {k: v for k, v in data.items() if k not in _SCENARIO_KEYS}
    for key in ("sweep_values", "algorithms", "schedules", "cross_distances"):
        if key in scen and not isinstance(scen[key], list):
            raise ConfigError(f"{key} must be a list")
    if name is not None:
        scen.setdefault("name", name)
    scen.setdefault("output_path", f"{scen.get('name', 'scenario')}.csv")
    return ScenarioSpec(base=NetworkConfig.from_mapping(net), **scen)


def load_scenario(path) -> ScenarioSpec:
    return scenario_from_mapping(read_flat_config(path), name=Path(path).stem)


@dataclass(frozen=True)
class SweepRow:
    sweep_value: float
    algorithm: str
    schedule: str
    sum_EE: float
    sum_SE: float
    mean_iters: float
    conv_frac: float

    def as_tuple(self) -> tuple:
        return (self.sweep_value, self.algorithm, self.schedule, self.sum_EE, self.sum_SE,
                self.mean_iters, self.conv_frac)


def run_scenario(spec: ScenarioSpec, trace_dir=None) -> list:
    """Run every (sweep point, algorithm, schedule, draw) and average over draws.

    Draw ``d`` uses the same topology and fading streams at every sweep
    point. ``mean_iters`` counts ``T_max + 1`` for runs that never met the
    stopping rule. A best response that fails inside the engine marks that
    run as not converged and leaves it out of the metric means.
    """
    rows = []
    for value, cfg in spec.points():
        channels = [sample_channels(generate_topology(cfg, draw=d), cfg, draw=d)
                    for d in range(spec.n_channel_draws)]
        for alg in spec.algorithms:
            engine = _ENGINES[alg]
            for kind in spec.schedules:
                sched = make_schedule(kind, cfg.K, cfg.T_max)
                ee, se, iters, conv = [], [], [], 0
                for d, ch in enumerate(channels):
                    try:
                        tr = engine(ch, sched, cfg)
                    except NonConvergenceError:
                        iters.append(cfg.T_max + 1)
                        continue
                    ee.append(tr.sum_ee)
                    se.append(tr.sum_se)
                    iters.append(tr.iters_to_converge)
                    conv += tr.converged
                    if trace_dir is not None:
                        tag = "none" if math.isnan(value) else repr(value)
                        tr.to_csv(Path(trace_dir) / f"{spec.name}_{tag}_{alg}_{kind}_d{d}.csv")
                n = spec.n_channel_draws
                rows.append(SweepRow(value, alg, kind, _mean(ee), _mean(se),
                                     float(np.mean(iters)), conv / n))
    return rows


def _mean(xs: Sequence[float]) -> float:
    return float(np.mean(xs)) if xs else math.nan


def rows_to_csv(rows: Sequence[SweepRow], dest=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_CSV_HEADER)
    for r in rows:
        w.writerow((repr(r.sweep_value), r.algorithm, r.schedule, repr(r.sum_EE),
                    repr(r.sum_SE), repr(r.mean_iters), repr(r.conv_frac)))
    text = buf.getvalue()
    if dest is not None:
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    return text


def emit_plotdata(rows: Sequence[SweepRow], out_dir, scenario: str,
                  group_by: Sequence[str] = ("algorithm", "schedule"),
                  y: str = "sum_EE") -> list:
    """Write one ``x y`` series file per curve, x ascending.

    Files are named ``<scenario>_<key1>_<key2>....dat`` from the ``group_by``
    fields. Returns the written paths in creation order.
    """
    if not rows:
        raise ValueError("no rows to emit")
    if y not in ("sum_EE", "sum_SE", "mean_iters", "conv_frac"):
        raise ValueError(f"unknown y column {y!r}")
    groups: dict = {}
    for r in rows:
        key = tuple(getattr(r, g) for g in group_by)
        groups.setdefault(key, []).append((r.sweep_value, getattr(r, y)))
    out_dir = Path(out_dir)
    paths = []
    for key, pts in groups.items():
        pts.sort(key=lambda p: p[0])
        xs = [p[0] for p in pts]
        if len(set(xs)) != len(xs):
            raise ValueError(f"group {key} has repeated x values; group by more fields")
        path = out_dir / ("_".join((scenario,) + tuple(str(k) for k in key)) + ".dat")
        with open(path, "w") as fh:
            for x, v in pts:
                fh.write(f"{x!r} {v!r}\n")
        paths.append(path)
    return paths
