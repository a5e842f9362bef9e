"""Exception hierarchy shared by all modules."""


class PhotonTrainError(Exception):
    """Base class for errors raised by the package."""


class ConfigError(PhotonTrainError, ValueError):
    """Invalid parameters, schedules or scenario documents."""


class NumericalError(PhotonTrainError, RuntimeError):
    """A numerical routine failed or left its accuracy contract."""


class QuadratureError(NumericalError):
    pass


class IntegrationError(NumericalError):
    pass


class GridResolutionError(NumericalError):
    """A frequency or time grid is too coarse for the requested quantity."""


class NormDriftError(NumericalError):
    pass


class ResidualAmplitudeError(NumericalError):
    """Atom/cavity amplitude left over where a completed emission was required."""
