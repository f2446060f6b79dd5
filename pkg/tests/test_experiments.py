import math

import numpy as np
import pytest

from eegame import ConfigError, NetworkConfig, generate_topology, sample_channels
from eegame.experiments import (SWEEP_CSV_HEADER, ScenarioSpec, SweepRow, emit_plotdata,
                                load_scenario, rows_to_csv, run_scenario)
from eegame.single_link import Spectrum, optimal_ee_power

SMALL = NetworkConfig(K=2, M=2, N=2, T_max=40)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ScenarioSpec(sweep="P_T_dBm", sweep_values=())
    with pytest.raises(ConfigError):
        ScenarioSpec(sweep="P_T_dBm", sweep_values=(10.0, 0.0))
    with pytest.raises(ConfigError):
        ScenarioSpec(algorithms=("ADMM",))
    with pytest.raises(ConfigError):
        ScenarioSpec(n_channel_draws=0)
    with pytest.raises(ConfigError):
        ScenarioSpec(sweep="D_cross", sweep_values=(1.0,))


def test_single_link_row_matches_closed_form():
    cfg = NetworkConfig(K=1, M=3, N=3)
    rows = run_scenario(ScenarioSpec(base=cfg, n_channel_draws=1))
    assert len(rows) == 1 and math.isnan(rows[0].sweep_value)
    ch = sample_channels(generate_topology(cfg, draw=0), cfg, draw=0)
    _, ee, _ = optimal_ee_power(Spectrum.from_channel(ch.direct(0)), cfg.P_C_W, cfg.P_T_W)
    assert rows[0].sum_EE == pytest.approx(ee, rel=1e-6)
    assert rows[0].conv_frac == 1.0


def test_circuit_power_sweep_on_isolated_links():
    base = NetworkConfig(K=2, M=2, N=2, topology="symmetric_two_link", cross_dist_m=math.inf)
    spec = ScenarioSpec(base=base, sweep="P_C_dBm", sweep_values=(14.0, 20.0, 26.0, 32.0),
                        n_channel_draws=5)
    rows = run_scenario(spec)
    ee = [r.sum_EE for r in rows]
    se = [r.sum_SE for r in rows]
    assert np.all(np.diff(ee) < 0) and np.all(np.diff(se) >= -1e-9)


def test_power_budget_sweep_trends():
    spec = ScenarioSpec(base=SMALL, sweep="P_T_dBm", sweep_values=(-30.0, 10.0, 50.0),
                        algorithms=("ADEE", "ADSE"), schedules=("simultaneous",),
                        n_channel_draws=5)
    rows = {(r.algorithm, r.sweep_value): r for r in run_scenario(spec)}
    low_ee, low_se = rows[("ADEE", -30.0)], rows[("ADSE", -30.0)]
    assert low_ee.sum_EE == pytest.approx(low_se.sum_EE, rel=1e-2)
    assert rows[("ADEE", 10.0)].sum_EE >= low_ee.sum_EE
    assert rows[("ADSE", 50.0)].sum_EE < rows[("ADSE", 10.0)].sum_EE


def test_run_is_deterministic_and_header_stable():
    spec = ScenarioSpec(base=SMALL, sweep="antennas", sweep_values=(1, 2), n_channel_draws=2,
                        schedules=("sequential", "unbalanced"))
    a, b = rows_to_csv(run_scenario(spec)), rows_to_csv(run_scenario(spec))
    assert a == b
    assert SWEEP_CSV_HEADER == ("sweep_value", "algorithm", "schedule", "sum_EE", "sum_SE",
                                "mean_iters", "conv_frac")
    assert a.splitlines()[0] == "sweep_value,algorithm,schedule,sum_EE,sum_SE,mean_iters,conv_frac"
    assert len(a.splitlines()) == 1 + 4


def test_sweep_parameters_apply():
    spec = ScenarioSpec(base=SMALL, sweep="K", sweep_values=(1, 3))
    assert [c.K for _, c in spec.points()] == [1, 3]
    spec = ScenarioSpec(base=SMALL, sweep="D_direct", sweep_values=(40.0,))
    assert spec.points()[0][1].direct_dist_m == 40.0
    with pytest.raises(ConfigError):
        ScenarioSpec(base=SMALL, sweep="antennas", sweep_values=(1.5,)).points()


def _row(x, alg="ADEE", sched="sequential", ee=1.0):
    return SweepRow(x, alg, sched, ee, 2.0, 3.0, 1.0)


def test_emit_plotdata_one_curve(tmp_path):
    rows = [_row(x, ee=x * 10) for x in (5.0, 1.0, 3.0, 2.0, 4.0)]
    paths = emit_plotdata(rows, tmp_path, "fig")
    assert [p.name for p in paths] == ["fig_ADEE_sequential.dat"]
    lines = paths[0].read_text().splitlines()
    assert len(lines) == 5
    assert [float(l.split()[0]) for l in lines] == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert float(lines[0].split()[1]) == 10.0


def test_emit_plotdata_grouping(tmp_path):
    rows = [_row(x, alg) for alg in ("ADEE", "ADSE") for x in (1.0, 2.0)]
    paths = emit_plotdata(rows, tmp_path, "s", group_by=("algorithm",))
    assert sorted(p.name for p in paths) == ["s_ADEE.dat", "s_ADSE.dat"]
    with pytest.raises(ValueError):
        emit_plotdata([], tmp_path, "s")
    with pytest.raises(OSError):
        emit_plotdata(rows, tmp_path / "missing", "s")


def test_load_scenario_splits_keys(tmp_path):
    p = tmp_path / "budget.cfg"
    p.write_text('K = 2\nsweep = "P_T_dBm"\nsweep_values = [0, 10]\n'
                 'algorithms = ["ADEE", "ADSE"]\nn_channel_draws = 3\n')
    spec = load_scenario(p)
    assert spec.name == "budget" and spec.base.K == 2 and spec.sweep_values == (0, 10)
    assert spec.output_path == "budget.csv"
    p.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        load_scenario(p)


def test_shipped_scenario_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    for name in ("power_budget_sweep", "circuit_power_isolated", "uniqueness_prob",
                 "convergence"):
        load_scenario(root / f"{name}.cfg")
