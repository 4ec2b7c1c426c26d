"""The degree-n zonal kernel on S^d and its two asymptotic regimes.

Z_n(t) = C(d,n) P_n^{(nu,nu)}(t) with nu = (d-2)/2 and
C(d,n) = (2n/(d-1) + 1) Gamma(d/2) Gamma(d+n-1) / (Gamma(d-1) Gamma(n+d/2)),
which grows like n^{d/2}, so all constant arithmetic stays in log space.
Convolution against Z_n (times the measure normalizer kappa) reproduces
degree-n spherical harmonics; the projection module owns that calibration.

Two approximations are provided: the one-term Bessel-uniform expansion
(valid on theta in (0, pi - eps], remainder one order of N down), and the
small-angle limit n^{1-d} Z_n(cos(r/n)) -> c_d r^{-nu} J_nu(r) whose
constant is fitted once per dimension at a large degree and frozen.
"""

import math
from dataclasses import dataclass

import numpy as np

from projlab.errors import DomainError, UnsupportedFeatureError
from projlab.specfun import JacobiParams, bessel_j, jacobi_eval, log_gamma_ratio
from projlab.sphere import surface_area

TABLE_POINTS_PER_DEGREE = 64


def kappa_default(d):
    """Measure normalizer 1/sigma(S^d) making kernel convolution a projector."""
    return 1.0 / surface_area(d)


def zonal_norm_constant(d, n):
    """C(d,n), evaluated as exp of log-gamma ratios."""
    if d < 2:
        raise DomainError(f"need d >= 2, got d={d}")
    if n < 0:
        raise DomainError(f"need n >= 0, got n={n}")
    if n == 0:
        return 1.0
    log_ratio = log_gamma_ratio(d / 2.0, d - 1.0) + log_gamma_ratio(
        d + n - 1.0, n + d / 2.0
    )
    return (2.0 * n / (d - 1.0) + 1.0) * math.exp(log_ratio)


def zonal_eval(d, n, t, calibrated=False):
    """Z_n(t), optionally times kappa(d)."""
    nu = (d - 2) / 2.0
    value = zonal_norm_constant(d, n) * jacobi_eval(JacobiParams(n, nu, nu), t)
    if calibrated:
        value = value * kappa_default(d)
    return value


@dataclass
class ZonalKernelTable:
    """Uniform-theta samples of Z_n with linear interpolation in arccos t.

    Sampling at TABLE_POINTS_PER_DEGREE per degree keeps the interpolation
    error below ~5e-4 of the kernel peak; callers needing more (projector
    exactness at small degrees) evaluate through jacobi_eval instead.
    """

    d: int
    n: int
    calibration: float
    samples: np.ndarray

    @classmethod
    def build(cls, d, n, calibration=1.0):
        if calibration <= 0:
            raise DomainError(f"calibration must be positive, got {calibration}")
        count = max(256, TABLE_POINTS_PER_DEGREE * n) + 1
        theta = np.linspace(0.0, np.pi, count)
        samples = zonal_eval(d, n, np.cos(theta))
        return cls(d=d, n=n, calibration=calibration, samples=samples)

    def eval(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > 1.0 + 1e-12):
            raise DomainError("kernel argument must lie in [-1, 1]")
        theta = np.arccos(np.clip(t, -1.0, 1.0))
        step = np.pi / (len(self.samples) - 1)
        pos = theta / step
        idx = np.minimum(pos.astype(int), len(self.samples) - 2)
        frac = pos - idx
        out = self.samples[idx] * (1.0 - frac) + self.samples[idx + 1] * frac
        return self.calibration * out


def frenzen_wong_main(d, n, theta, m=1):
    """One-term Bessel-uniform approximation of P_n^{(nu,nu)}(cos theta).

    With N = n + nu + 1/2, the leading term is
    [Gamma(n+nu+1)/n!] (sin(t/2) cos(t/2))^{-nu} (t/sin t)^{1/2} N^{-nu} J_nu(N t);
    the dropped remainder is theta^nu O(N^{-1}) inside the bracket.  Only
    the leading term is available: the higher coefficient functions have
    no closed form here.
    """
    if m != 1:
        raise UnsupportedFeatureError("only the one-term approximation is available")
    nu = (d - 2) / 2.0
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(th <= 0.0) or np.any(th > np.pi - 0.05):
        raise DomainError("theta must lie in (0, pi - 0.05]")
    big_n = n + nu + 0.5
    log_pref = log_gamma_ratio(n + nu + 1.0, n + 1.0)
    half = th / 2.0
    bracket = (
        np.exp(log_pref)
        * (np.sin(half) * np.cos(half)) ** (-nu)
        * np.sqrt(th / np.sin(th))
        * big_n ** (-nu)
        * bessel_j(nu, big_n * th)
    )
    return float(bracket[0]) if scalar else bracket.reshape(np.shape(theta))


def fw_envelope(d, n, theta):
    """Oscillation amplitude of the leading term at theta.

    The bracket prefactor times N^{-nu} sqrt(2/(pi N theta)), the size of
    the J_nu swing once N theta is a few units.  Dividing |exact - approx|
    by this gives a relative error free of the oscillation zeros, and one
    that decays like 1/N uniformly over [10/N, pi/2].
    """
    nu = (d - 2) / 2.0
    scalar = np.isscalar(theta) or np.ndim(theta) == 0
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(th <= 0.0) or np.any(th > np.pi - 0.05):
        raise DomainError("theta must lie in (0, pi - 0.05]")
    big_n = n + nu + 0.5
    half = th / 2.0
    log_pref = log_gamma_ratio(n + nu + 1.0, n + 1.0)
    env = (
        np.exp(log_pref)
        * (np.sin(half) * np.cos(half)) ** (-nu)
        * np.sqrt(th / np.sin(th))
        * big_n ** (-nu)
        * np.sqrt(2.0 / (np.pi * big_n * th))
    )
    return float(env[0]) if scalar else env.reshape(np.shape(theta))


_MH_FIT_DEGREE = 4096
_mh_constants: dict[int, float] = {}


def mehler_heine_constant(d):
    """The frozen small-angle constant c_d, least-squares fitted at a large
    degree over r in [0.5, 8] and cached per dimension."""
    if d not in _mh_constants:
        nu = (d - 2) / 2.0
        n = _MH_FIT_DEGREE
        r = np.linspace(0.5, 8.0, 65)
        lhs = float(n) ** (1 - d) * zonal_eval(d, n, np.cos(r / n))
        base = r ** (-nu) * bessel_j(nu, r)
        _mh_constants[d] = float(np.dot(lhs, base) / np.dot(base, base))
    return _mh_constants[d]


def mehler_heine(d, n, r):
    """Both sides of the small-angle limit at finite n.

    Returns (n^{1-d} Z_n(cos(r/n)), c_d r^{-nu} J_nu(r)); their gap decays
    like 1/n on fixed r-ranges.
    """
    scalar = np.isscalar(r) or np.ndim(r) == 0
    rr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rr <= 0.0) or np.any(rr > n / 2.0):
        raise DomainError("need 0 < r <= n/2")
    nu = (d - 2) / 2.0
    lhs = float(n) ** (1 - d) * zonal_eval(d, n, np.cos(rr / n))
    rhs = mehler_heine_constant(d) * rr ** (-nu) * bessel_j(nu, rr)
    if scalar:
        return float(lhs[0]), float(rhs[0])
    return lhs.reshape(np.shape(r)), rhs.reshape(np.shape(r))


def kernel_sup_bound(d, n):
    """max_t |Z_n(t)| / n^{d-1} over a dense theta grid (endpoints included)."""
    if n < 1:
        raise DomainError(f"need n >= 1, got n={n}")
    theta = np.linspace(0.0, np.pi, TABLE_POINTS_PER_DEGREE * n + 1)
    values = zonal_eval(d, n, np.cos(theta))
    return float(np.max(np.abs(values)) / float(n) ** (d - 1))
