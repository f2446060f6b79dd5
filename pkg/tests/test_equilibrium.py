import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eegame import (ChannelSet, DomainError, RankDeficiencyError, StrategyProfile,
                    check_uniqueness, compute_alpha, dinkelbach_best_response,
                    jacobian_spectral_norm, link_ee, link_rate, reduce_general_rank,
                    uniqueness_probability)
from eegame.equilibrium import (PROBABILITY_CSV_HEADER, certify, lift,
                                write_probability_csv)

from conftest import random_channels, random_psd, symmetric_cfg


def test_jacobian_norm_simple_cases(rng):
    ch = random_channels(rng, 3, 2, 2, cross_scale=0.0)
    assert jacobian_spectral_norm(ch, 0) == 0.0
    I = np.eye(2)
    ch2 = ChannelSet(((I, I), (I, I)))
    assert jacobian_spectral_norm(ch2, 0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        jacobian_spectral_norm(random_channels(rng, 1, 2, 2), 0)


@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(1, 3), st.integers(1, 3))
def test_jacobian_gram_route_matches_dense(seed, K, M, N):
    ch = random_channels(np.random.default_rng(seed), K, M, N)
    for k in range(K):
        a = jacobian_spectral_norm(ch, k, "gram")
        b = jacobian_spectral_norm(ch, k, "dense")
        assert a == pytest.approx(b, rel=1e-9, abs=1e-12)


@given(st.floats(0.01, 10.0), st.floats(0.0, 10.0), st.floats(0.01, 100.0))
def test_scalar_alpha_closed_form(g, c, P_T):
    h, x = math.sqrt(g), math.sqrt(c)
    ch = ChannelSet(((np.array([[h]]), np.array([[x]])), (np.array([[x]]), np.array([[h]]))))
    expect = g * c / (g / (1 + P_T * (g + c))) ** 2
    assert compute_alpha(ch, 0, P_T).alpha == pytest.approx(expect, rel=1e-9)


def test_alpha_nonincreasing_as_cross_gains_shrink(rng):
    ch = random_channels(rng, 3, 2, 3)
    scales = np.linspace(1.0, 0.0, 10)
    for k in range(3):
        a = [compute_alpha(ch.scaled_cross(s), k, 1.0).alpha for s in scales]
        assert np.all(np.diff(a) <= 1e-12 * max(a))
        assert a[-1] == 0.0


@given(st.integers(0, 10_000))
def test_alpha_invariant_to_receive_rotation(seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, 3, 2, 3)
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    rot = ChannelSet(tuple(tuple(U @ b for b in row) for row in ch.H))
    for k in range(3):
        a, b = compute_alpha(ch, k, 0.5), compute_alpha(rot, k, 0.5)
        assert b.alpha == pytest.approx(a.alpha, rel=1e-9)
        assert b.jacobian_norm == pytest.approx(a.jacobian_norm, rel=1e-9)


def test_rank_deficient_direct_channel_needs_reduction(rng):
    ch = random_channels(rng, 2, 3, 2)  # fat: 2 x 3
    with pytest.raises(RankDeficiencyError):
        compute_alpha(ch, 0, 1.0)
    reduced, bases = reduce_general_rank(ch)
    assert reduced.tx_dims == (2, 2)
    assert all(np.isfinite(compute_alpha(reduced, k, 1.0).alpha) for k in range(2))


def test_check_uniqueness_report_fields(rng):
    ch = random_channels(rng, 3, 2, 2, cross_scale=0.0)
    rep = check_uniqueness(ch, 1.0)
    assert rep.satisfied and rep.bound == pytest.approx(math.sqrt(0.5))
    assert np.all(rep.alpha == 0) and np.all(rep.rho_direct > 0)
    one = check_uniqueness(random_channels(rng, 1, 2, 2), 1.0)
    assert one.satisfied and one.bound == math.inf
    big = check_uniqueness(random_channels(rng, 2, 2, 2, cross_scale=3.0), 100.0)
    assert not big.satisfied and big.alpha.max() >= big.bound


def test_full_power_links_are_flagged(rng, caplog):
    ch = random_channels(rng, 2, 2, 2, cross_scale=0.0)
    prof = StrategyProfile((np.eye(2) * 0.5, np.eye(2) * 0.1), 1.0)
    rep = check_uniqueness(ch, 1.0, prof)
    assert rep.full_power_links == (0,) and rep.large_power_warning
    assert "full power" in caplog.text


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 4))
def test_reduction_preserves_rate_and_trace(seed, M, N):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, 2, M, N)
    reduced, bases = reduce_general_rank(ch)
    for j in range(2):
        V = bases[j]
        assert np.allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=1e-12)
        Qbar = random_psd(rng, V.shape[1], 0.7)
        Q = lift(V, Qbar)
        assert np.trace(Q).real == pytest.approx(np.trace(Qbar).real, rel=1e-12)
        R = np.eye(N) * 1.5
        assert link_rate(Q, ch.direct(j), R) == pytest.approx(
            link_rate(Qbar, reduced.direct(j), R), rel=1e-9, abs=1e-12)


def test_rank_one_reduced_best_response_matches_grid():
    # rank-1 direct channel with M = 2: one reduced dimension
    u = np.array([[1.0], [2.0]]) / math.sqrt(5)
    v = np.array([[0.6, 0.8j]])
    H = 2.0 * u @ v
    Z = np.zeros((2, 2))
    ch = ChannelSet(((H, Z), (Z, H)))
    reduced, bases = reduce_general_rank(ch)
    assert reduced.tx_dims == (1, 1)
    P_T, P_C = 1.0, 0.5
    br = dinkelbach_best_response(reduced.direct(0), np.eye(2), P_T, P_C, eps=1e-12)
    Q = lift(bases[0], br.Q_star)
    ee = link_ee(Q, H, np.eye(2), P_C)
    # grid over 2x2 PSD matrices diag(a, b) in the eigenbasis of H^H H
    _, W = np.linalg.eigh(H.conj().T @ H)
    best = 0.0
    for a in np.arange(0, P_T + 1e-12, 1e-3):
        for b in np.arange(0, P_T - a + 1e-12, 0.05):
            Qg = W @ np.diag([b, a]) @ W.conj().T
            best = max(best, link_ee(Qg, H, np.eye(2), P_C))
    assert ee >= best - 1e-6


def test_zero_direct_channel_is_inactive(rng):
    ch = random_channels(rng, 2, 2, 2)
    Z = np.zeros((2, 2))
    ch0 = ChannelSet(((Z, ch.H[0][1]), (ch.H[1][0], ch.H[1][1])))
    reduced, bases = reduce_general_rank(ch0)
    assert bases[0].shape == (2, 0) and reduced.tx_dims == (0, 2)
    rep = check_uniqueness(reduced, 1.0)
    assert rep.alpha[0] == 0.0


def test_probability_is_one_without_cross_channels():
    cfg = symmetric_cfg()
    rows = uniqueness_probability(cfg, [math.inf], trials=20)
    assert rows == [(math.inf, 20, 20, 1.0)]


def test_probability_deterministic_and_csv(tmp_path):
    cfg = symmetric_cfg()
    a = uniqueness_probability(cfg, [8.0, 16.0], trials=50, seed=3)
    b = uniqueness_probability(cfg, [8.0, 16.0], trials=50, seed=3)
    assert a == b
    write_probability_csv(a, tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert PROBABILITY_CSV_HEADER == ("D_cross", "trials", "successes", "probability")
    assert lines[0] == "D_cross,trials,successes,probability" and len(lines) == 3
    with pytest.raises(ValueError):
        uniqueness_probability(cfg, [8.0], trials=0)


def test_certified_instances_agree_across_starts():
    from eegame.game import make_schedule, random_profile, run_adee
    from eegame import sample_channels, generate_topology
    from eegame.rng import stream
    cfg = symmetric_cfg(cross_dist_m=16.0)
    ch = next(c for c in (sample_channels(generate_topology(cfg), cfg, draw=d)
                          for d in range(50)) if certify(c, cfg.P_T_W))
    finals = [run_adee(ch, make_schedule(kind, 2, cfg.T_max), cfg,
                       random_profile(ch, cfg.P_T_W, stream(1, "init", i))).profile
              for i in range(3) for kind in ("sequential", "simultaneous")]
    for a, b in itertools.combinations(finals, 2):
        assert max(np.linalg.norm(x - y) for x, y in zip(a.Q, b.Q)) <= 1e-4 * cfg.P_T_W
