"""Command-line entry point ``eegame``.

Exit codes: 0 success, 2 bad configuration, 3 file-system error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .channel import generate_topology, sample_channels
from .config import dbm_to_watt, read_flat_config
from .equilibrium import (check_uniqueness, reduce_general_rank, uniqueness_probability,
                          write_probability_csv)
from .errors import (ConfigError, DomainError, InfeasibleGeometryError, InvalidScheduleError,
                     RankDeficiencyError, StructuralError)
from .experiments import emit_plotdata, load_scenario, rows_to_csv, run_scenario
from .game import make_schedule, run_adee
from .single_link import Spectrum, circuit_power_sweep, write_sweep_csv

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3
UNIQUENESS_CSV_HEADER = ("draw", "link", "alpha", "bound", "satisfied", "full_power")


def _scenario(args):
    spec = load_scenario(args.config)
    changes = {}
    if args.seed is not None:
        changes["base"] = spec.base.with_(seed=args.seed)
    if args.draws is not None:
        changes["n_channel_draws"] = args.draws
        changes["trials"] = args.draws
    if changes:
        spec = replace(spec, **changes)
    return spec


def _status(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_run(args) -> int:
    spec = _scenario(args)
    out = Path(args.out or spec.output_path)
    if args.traces:
        Path(args.traces).mkdir(parents=True, exist_ok=True)
    rows = run_scenario(spec, trace_dir=args.traces)
    rows_to_csv(rows, out)
    if args.plotdata:
        Path(args.plotdata).mkdir(parents=True, exist_ok=True)
        emit_plotdata(rows, args.plotdata, spec.name, y=args.y)
    _status(args, f"wrote {len(rows)} rows to {out}")
    return EXIT_OK


def cmd_check_uniqueness(args) -> int:
    spec = _scenario(args)
    cfg = spec.base
    draws = args.draws or 1
    sched = make_schedule("simultaneous", cfg.K, cfg.T_max)
    out_rows, certified = [], 0
    for d in range(draws):
        ch = sample_channels(generate_topology(cfg, draw=d), cfg, draw=d)
        reduced, _ = reduce_general_rank(ch)
        profile = run_adee(ch, sched, cfg).profile
        rep = check_uniqueness(reduced, cfg.P_T_W, profile)
        certified += rep.satisfied
        for k, a in enumerate(rep.alpha):
            out_rows.append((d, k + 1, repr(float(a)), repr(rep.bound), int(a < rep.bound),
                             int(k in rep.full_power_links)))
    dest = Path(args.out or f"{spec.name}_uniqueness.csv")
    with open(dest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(UNIQUENESS_CSV_HEADER)
        w.writerows(out_rows)
    _status(args, f"{certified}/{draws} draws certified; wrote {dest}")
    return EXIT_OK


def cmd_uniqueness_prob(args) -> int:
    spec = _scenario(args)
    cfg = spec.base.with_(topology="symmetric_two_link")
    dists = spec.cross_distances or spec.sweep_values
    if not dists:
        raise ConfigError("set cross_distances (list of meters)")
    rows = uniqueness_probability(cfg, dists, spec.trials)
    dest = Path(args.out or f"{spec.name}_uniqueness_prob.csv")
    write_probability_csv(rows, dest)
    _status(args, f"wrote {len(rows)} distances to {dest}")
    return EXIT_OK


_SPECTRUM_KEYS = {"eigenvalues", "P_C_W", "P_C_dBm", "P_T_W", "P_T_dBm", "name"}


def cmd_single_link(args) -> int:
    data = read_flat_config(args.config)
    unknown = sorted(set(data) - _SPECTRUM_KEYS)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    if "eigenvalues" not in data:
        raise ConfigError("eigenvalues is required")
    spec = Spectrum(tuple(sorted(data["eigenvalues"], reverse=True)))
    if "P_C_W" in data:
        pcs = [float(x) for x in _list(data["P_C_W"])]
    elif "P_C_dBm" in data:
        pcs = [dbm_to_watt(float(x)) for x in _list(data["P_C_dBm"])]
    else:
        raise ConfigError("set P_C_W or P_C_dBm")
    P_T = data.get("P_T_W")
    if P_T is None and "P_T_dBm" in data:
        P_T = dbm_to_watt(float(data["P_T_dBm"]))
    rows = circuit_power_sweep(spec, pcs, P_T)
    dest = Path(args.out or f"{data.get('name', Path(args.config).stem)}_single_link.csv")
    write_sweep_csv(rows, dest)
    mode = "unconstrained" if P_T is None else f"constrained (P* clamped to P_T = {P_T!r} W)"
    _status(args, f"mode: {mode}; wrote {len(rows)} rows to {dest}")
    return EXIT_OK


def _list(v):
    return v if isinstance(v, list) else [v]


def cmd_convergence(args) -> int:
    spec = _scenario(args)
    cfg = spec.base
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    ch = sample_channels(generate_topology(cfg, draw=0), cfg, draw=0)
    for kind in spec.schedules:
        tr = run_adee(ch, make_schedule(kind, cfg.K, cfg.T_max), cfg)
        dest = out_dir / f"{spec.name}_convergence_{kind}.csv"
        tr.to_csv(dest)
        it = tr.iters_to_converge if tr.converged else "-"
        _status(args, f"{kind}: stop={tr.stop_reason} iters={it} -> {dest}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags go before or after the subcommand
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output file (directory for convergence)")
    common.add_argument("--draws", type=int, help="channel draws / Monte Carlo trials")
    common.add_argument("--quiet", action="store_true", help="suppress status output")

    p = argparse.ArgumentParser(prog="eegame", parents=[common],
                                description="Energy-efficiency games on MIMO interference channels")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="sweep scenario -> CSV of sum metrics")
    r.add_argument("config")
    r.add_argument("--plotdata", help="directory for per-curve .dat files")
    r.add_argument("--y", default="sum_EE", choices=("sum_EE", "sum_SE", "mean_iters", "conv_frac"))
    r.add_argument("--traces", help="directory for per-run trace CSVs")
    r.set_defaults(func=cmd_run)
    for name, func, hlp in (
            ("check-uniqueness", cmd_check_uniqueness, "per-link uniqueness coefficients"),
            ("uniqueness-prob", cmd_uniqueness_prob, "certification rate vs cross distance"),
            ("single-link", cmd_single_link, "EE-optimal power vs circuit power"),
            ("convergence", cmd_convergence, "per-link EE traces per schedule")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("config")
        s.set_defaults(func=func)
    return p


_GLOBAL_DEFAULTS = {"seed": None, "out": None, "draws": None, "quiet": False}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for name, default in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    if args.draws is not None and args.draws < 1:
        print("error: --draws must be positive", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError, StructuralError, InvalidScheduleError,
            RankDeficiencyError, InfeasibleGeometryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
