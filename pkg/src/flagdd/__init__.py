"""Flag-preamble delay-Doppler channel estimation for chirp-carrier waveforms."""

from flagdd.sequences import (
    CurtainParams,
    FlagPreamble,
    PeakKind,
    default_flag,
    make_curtain,
    make_flag,
    make_peak,
)
from flagdd.channel import ChannelRealization, Path, ScenarioConfig
from flagdd.afdm import AfdmConfig
from flagdd.estimation import (
    EstimatorConfig,
    PathEstimate,
    estimate_proposed,
    estimate_traditional,
)

__version__ = "0.1.0"

__all__ = [
    "AfdmConfig",
    "ChannelRealization",
    "CurtainParams",
    "EstimatorConfig",
    "FlagPreamble",
    "Path",
    "PathEstimate",
    "PeakKind",
    "ScenarioConfig",
    "default_flag",
    "estimate_proposed",
    "estimate_traditional",
    "make_curtain",
    "make_flag",
    "make_peak",
]
