"""Energy-efficient transmission games on MIMO interference channels.

Each link of a K-link MIMO interference channel picks a transmit covariance
maximizing its own energy efficiency (rate over transmit plus circuit power).
The package computes Nash equilibria of that game with asynchronous
best-response dynamics, certifies uniqueness analytically, and drives
desk-scale sweep experiments.
"""

from .config import NetworkConfig, dbm_to_watt, load_network_config
from .errors import (
    ConfigError,
    DomainError,
    InfeasibleGeometryError,
    InvalidScheduleError,
    NonConvergenceError,
    NumericError,
    RankDeficiencyError,
    StructuralError,
)
from .channel import (
    ChannelSet,
    PathLossModel,
    Topology,
    generate_topology,
    interference_covariance,
    path_loss_dB,
    sample_channels,
)
from .best_response import (
    BestResponseResult,
    StrategyProfile,
    dinkelbach_best_response,
    effective_channel_evd,
    inner_solve,
    link_ee,
    link_rate,
    waterfill,
)
from .game import (
    GameTrace,
    Schedule,
    default_profile,
    estimate_contraction,
    make_schedule,
    run_adee,
    run_adse,
    verify_ne,
)
from .equilibrium import (
    UniquenessReport,
    check_uniqueness,
    compute_alpha,
    jacobian_spectral_norm,
    reduce_general_rank,
    uniqueness_probability,
)
from .single_link import (
    Spectrum,
    breakpoints,
    low_power_regime_check,
    optimal_ee_power,
    se_closed_form,
    se_derivative,
    symmetric_high_power_limit,
)

__version__ = "0.1.0"
