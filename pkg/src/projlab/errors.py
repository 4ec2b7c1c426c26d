"""Error taxonomy shared by every module.

The CLI maps these onto exit codes: DomainError / UsageError /
UnsupportedFeatureError and assertion failures exit 2, ConfigurationError
exits 3, ResolutionError and ConditioningError exit 4.
"""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Bad experiment configuration: unknown key, malformed value, bad d."""


class ResolutionError(RuntimeError):
    """Grid too coarse to resolve the requested degree or wavelength."""


class ConditioningError(RuntimeError):
    """Near-resonant mode or step size outside the stable window."""


class CalibrationError(RuntimeError):
    """Projector constant failed to reproduce harmonics across degrees."""


class UnsupportedFeatureError(NotImplementedError):
    """Requested a variant the package deliberately does not provide."""


class UsageError(ValueError):
    """Operation invoked with structurally mismatched inputs."""
