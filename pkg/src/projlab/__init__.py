"""Numerical laboratory for spherical harmonic projection norms on S^d.

The package studies the degree-n projector H_n acting on functions on the
sphere S^d: its zonal convolution kernel, the growth exponent gamma(p, q)
of the operator norm, explicit extremizer families, a Carleman-type
inequality for the conjugated Laplacian, the stereographic limit to the
Fourier extension operator, and the oscillatory-integral phase conditions
behind the upper bounds.  Everything is desk-scale numerics: quadrature
grids, log-log exponent fits, and round-trip identities.
"""

from projlab.errors import (
    CalibrationError,
    ConditioningError,
    ConfigurationError,
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ConditioningError",
    "ConfigurationError",
    "DomainError",
    "ResolutionError",
    "UnsupportedFeatureError",
    "UsageError",
    "__version__",
]
