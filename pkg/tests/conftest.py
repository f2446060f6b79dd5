import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from eegame import ChannelSet, NetworkConfig

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_channels(rng, K, M, N, cross_scale=1.0):
    """Unit-variance Rayleigh channels; cross links scaled by ``cross_scale``."""
    H = tuple(tuple((rng.standard_normal((N, M)) + 1j * rng.standard_normal((N, M)))
                    / np.sqrt(2) * (1.0 if j == k else cross_scale)
                    for k in range(K)) for j in range(K))
    return ChannelSet(H)


def random_psd(rng, m, trace):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    S = A @ A.conj().T
    return S * (trace / np.trace(S).real)


def symmetric_cfg(**kw):
    """Two links, unit direct distance, exponent 3.5, P_T = 10 mW, noise 1 mW."""
    base = dict(K=2, M=2, N=2, P_T_dBm=10.0, noise_dBm=0.0, direct_dist_m=1.0,
                pathloss_offset_dB=0.0, pathloss_slope=35.0,
                topology="symmetric_two_link", cross_dist_m=12.0, T_max=200)
    base.update(kw)
    return NetworkConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
