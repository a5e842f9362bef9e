"""Single-atom cavity-QED source of entangled one-photon wavepacket trains."""

from .control import (
    BranchParams,
    ChirpCompensated,
    ConstantWindow,
    ControlPulse,
    ExplicitPhase,
    Gaussian,
    GenerationSequence,
    Measurement,
    MixingPulse,
    RaisedCosineWindow,
    Recycle,
    Schedule,
    Tabulated,
    ZeroPhase,
    accumulated_phases,
    effective_rate,
    validate_schedule,
)
from .exceptions import (
    ConfigError,
    GridResolutionError,
    IntegrationError,
    NormDriftError,
    NumericalError,
    PhotonTrainError,
    QuadratureError,
    ResidualAmplitudeError,
)

__version__ = "0.1.0"
