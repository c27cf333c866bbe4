"""izosga: joint long-term IRS tuning and short-term WMMSE precoding.

A simulator and optimizer library: Rician channel simulation through an
intelligent reflecting surface, a budgeted WMMSE inner solver for the
weighted sumrate, a two-point zeroth-order quasi-gradient over the IRS
parameters, the projected stochastic ascent outer loop, Moreau-envelope
stationarity diagnostics, and a reproducible experiment harness.
"""
from ._version import __version__
from ._kernels import backend_name
from .channel import ChannelModel, OmegaSampler, StateOfNature, effective_channel, sample_state
from .config import ChannelParams, ConfigError, Geometry, NetworkConfig
from .diagnostics import ErrorLedger, MoreauConfig, moreau_grad_norm, track_epsilon_bar
from .optimizer import (
    BudgetSchedule,
    IterateRecord,
    IzosgaConfig,
    RunResult,
    SeedBundle,
    project_theta,
    run,
    schedule_eval,
    tolerance_parameters,
)
from .reflection import IrsParams, VaractorCircuit, irs_reflection
from .sumrate import Precoder, SumrateValue, cogradient, sinr, sumrate
from .wmmse import OracleConfig, OracleFailure, OracleReport, measure_gap, wmmse_solve
from .zo_gradient import channel_probe_pair, quasi_gradient

__all__ = [
    "__version__",
    "backend_name",
    "ChannelModel",
    "OmegaSampler",
    "StateOfNature",
    "effective_channel",
    "sample_state",
    "ChannelParams",
    "ConfigError",
    "Geometry",
    "NetworkConfig",
    "ErrorLedger",
    "MoreauConfig",
    "moreau_grad_norm",
    "track_epsilon_bar",
    "BudgetSchedule",
    "IterateRecord",
    "IzosgaConfig",
    "RunResult",
    "SeedBundle",
    "project_theta",
    "run",
    "schedule_eval",
    "tolerance_parameters",
    "IrsParams",
    "VaractorCircuit",
    "irs_reflection",
    "Precoder",
    "SumrateValue",
    "cogradient",
    "sinr",
    "sumrate",
    "OracleConfig",
    "OracleFailure",
    "OracleReport",
    "measure_gap",
    "wmmse_solve",
    "channel_probe_pair",
    "quasi_gradient",
]
