"""Simulator and analysis toolkit for heralded-absorption entanglement swapping."""

from .states import (
    BellLabel,
    JointState,
    ParameterError,
    Sector2p,
    StateValidationError,
    make_initial_state,
    pair13_fidelity,
)
from .channels import (
    FlipKind,
    SpinSite,
    absorption_channel,
    dephasing_channel,
    flip_channel,
    photon_loss_channel,
    qnd_povm,
)
from .protocol import (
    HeraldRecord,
    HeraldType,
    ProtocolParams,
    ProtocolResult,
    build_schedule,
    epoch_target,
    final_parity_measurement,
    run_protocol,
)
from .trajectories import TrajectoryResult, run_trajectories
from .analytics import (
    NoFeasibleRoundsError,
    OptimizeOutcome,
    db_to_probability,
    dephasing_factor,
    false_negative_bound,
    false_negative_ratio,
    false_positive_bound,
    false_positive_ratio,
    lorentzian_suppression,
    optimize_rounds,
    probability_to_db,
    spectral_width,
)
from .sweep import (
    RelayChainSpec,
    RelayResult,
    SweepCell,
    SweepGrid,
    compose_bell_diagonals,
    relay_chain,
    sweep,
)
from .config import ConfigError, load_config, parse_config_text

__version__ = "0.1.0"

__all__ = [
    "BellLabel",
    "JointState",
    "ParameterError",
    "Sector2p",
    "StateValidationError",
    "make_initial_state",
    "pair13_fidelity",
    "FlipKind",
    "SpinSite",
    "absorption_channel",
    "dephasing_channel",
    "flip_channel",
    "photon_loss_channel",
    "qnd_povm",
    "HeraldRecord",
    "HeraldType",
    "ProtocolParams",
    "ProtocolResult",
    "build_schedule",
    "epoch_target",
    "final_parity_measurement",
    "run_protocol",
    "TrajectoryResult",
    "run_trajectories",
    "NoFeasibleRoundsError",
    "OptimizeOutcome",
    "db_to_probability",
    "dephasing_factor",
    "false_negative_bound",
    "false_negative_ratio",
    "false_positive_bound",
    "false_positive_ratio",
    "lorentzian_suppression",
    "optimize_rounds",
    "probability_to_db",
    "spectral_width",
    "RelayChainSpec",
    "RelayResult",
    "SweepCell",
    "SweepGrid",
    "compose_bell_diagonals",
    "relay_chain",
    "sweep",
    "ConfigError",
    "load_config",
    "parse_config_text",
    "__version__",
]
