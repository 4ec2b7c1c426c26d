"""Extremizer families that probe the projector norm from below.

Four families, each tuned to one face of the exponent polygon: the raw
Jacobi profile about a pole (ZONAL), the indicator of the coherent
oscillation bands of the kernel (OSC_SET), the highest-weight harmonic
concentrating on a great circle (BEAM), and a polar cap shrinking at the
kernel's own scale (CAP).  Each family comes with the exponent it
certifies; the norm laboratory takes maxima over families.

The ZONAL witness is evaluated through the plain Jacobi recurrence, not
through the projector's kernel table, so witness ratios exercise an
independent evaluation path.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.special

from projlab.errors import DomainError, ResolutionError, UsageError
from projlab.exponents import ExponentPoint
from projlab.specfun import JacobiParams, jacobi_eval
from projlab.sphere import GridFunction, SphereGrid, build_grid, cap_indicator
from projlab.zonal import kappa_default, zonal_eval

FAMILIES = ("ZONAL", "OSC_SET", "BEAM", "CAP")

# Oscillation bands are read off between 1/12 and 1/6 of a turn, where
# the kernel phase is past its Bessel transition but short of the
# equator; the band fraction pi/4 out of each 2 pi period keeps the
# cosine factor >= cos(pi/4 + small phase drift) > 0 throughout.
_BAND_FRACTION = math.pi / 4.0


@dataclass(frozen=True)
class WitnessSpec:
    family: str
    d: int
    n: int
    c: float = 0.125

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UsageError(f"unknown witness family {self.family!r}")
        if self.n < 8:
            raise DomainError(f"witness degree must be >= 8, got {self.n}")
        if not 0.0 < self.c <= 0.25:
            raise DomainError(f"tuning constant must be in (0, 1/4], got {self.c}")

    @property
    def big_n(self):
        return self.n + (self.d - 1) / 2.0


def _polar_angles(grid):
    return np.arccos(np.clip(grid.nodes[:, -1], -1.0, 1.0))


def make_witness(spec: WitnessSpec, grid: SphereGrid) -> GridFunction:
    """Sample the named family on the grid, pole on the last axis."""
    if grid.d != spec.d:
        raise UsageError(f"grid is S^{grid.d}, witness wants S^{spec.d}")
    if spec.family in ("OSC_SET", "CAP") and grid.polar_resolution < 4 * spec.n:
        raise ResolutionError(
            f"polar resolution {grid.polar_resolution} cannot resolve scale "
            f"1/{spec.n}; need >= 4n for {spec.family}"
        )
    if spec.family == "BEAM":
        vals = (grid.nodes[:, 0] + 1j * grid.nodes[:, 1]) ** spec.n
        return GridFunction(grid, vals)
    if spec.family == "ZONAL":
        alpha = (spec.d - 2) / 2.0
        t = np.clip(grid.nodes[:, -1], -1.0, 1.0)
        vals = jacobi_eval(JacobiParams(spec.n, alpha, alpha), t)
        return GridFunction(grid, vals.astype(complex))
    if spec.family == "OSC_SET":
        return GridFunction(grid, _oscillation_bands(spec, _polar_angles(grid)))
    return _snapped_cap(spec, grid)


def _oscillation_bands(spec, theta):
    """Indicator of the union over N/12 <= k <= N/6 of the phase windows
    N theta - (d-1) pi/4 in [2 pi k, 2 pi k + pi/4]."""
    big_n = spec.big_n
    phase = big_n * theta - (spec.d - 1) * math.pi / 4.0
    k = np.floor(phase / (2.0 * math.pi))
    rem = phase - 2.0 * math.pi * k
    member = (rem <= _BAND_FRACTION) & (k >= big_n / 12.0) & (k <= big_n / 6.0)
    return member.astype(complex)


def _snapped_cap(spec, grid):
    """Cap of geodesic radius c/N, widened to the first populated polar
    shell when the nominal radius falls between the pole and the nearest
    node (it always does at res = 4n)."""
    theta = _polar_angles(grid)
    rho = spec.c / spec.big_n
    theta_min = float(np.min(theta))
    if theta_min > rho:
        rho = theta_min * (1.0 + 1e-9)
    pole = np.zeros(grid.d + 1)
    pole[-1] = 1.0
    return cap_indicator(grid, pole, rho)


def predicted_lower_slope(spec: WitnessSpec, pt: ExponentPoint):
    """The exponent in n that the family certifies at (1/p, 1/q)."""
    d, x, y = spec.d, pt.x, pt.y
    if spec.family == "BEAM":
        return (d - 1) / 2.0 * (x - y)
    if spec.family == "CAP":
        return d * (x - y) - 1.0
    if spec.family == "OSC_SET":
        return (d - 1) / 2.0 - d * y
    edge = (d - 1) / (2.0 * d)
    if not (x > edge > y):
        raise DomainError(
            f"zonal witness certifies nothing at ({x}, {y}); "
            f"needs 1/p > {edge} > 1/q"
        )
    return (d - 1) / 2.0 - d * y


def projected_value_at(d, n, f: GridFunction, points):
    """(H_n f)(zeta) at arbitrary points by the literal kernel sum.

    Runs over the support of f only, so indicator witnesses stay cheap.
    Independent of the ring-mode machinery; used to certify pointwise
    lower bounds at the pole.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != d + 1:
        raise UsageError(f"points must sit in R^{d + 1}")
    if np.any(np.abs(np.linalg.norm(points, axis=1) - 1.0) > 1e-10):
        raise DomainError("evaluation points must lie on the sphere")
    mask = f.values != 0.0
    nodes = f.grid.nodes[mask]
    wf = f.grid.weights[mask] * f.values[mask]
    out = np.empty(points.shape[0], dtype=complex)
    for i, zeta in enumerate(points):
        t = np.clip(nodes @ zeta, -1.0, 1.0)
        out[i] = kappa_default(d) * np.sum(zonal_eval(d, n, t) * wf)
    return out


def beam_lp_norm(d, n, p, polar_resolution=None):
    """||h_n||_p on S^d from ring data alone; |h_n| is ring-constant.

    The closed form is sigma(S^1) sigma(S^{d-2}) B(np/2 + 1, (d-1)/2)/2,
    kept in the tests as the oracle; this routine is the grid-side value
    used by scaling fits, cheap even where node arrays would not fit.
    """
    if p != math.inf and p < 1:
        raise DomainError(f"need p >= 1 or inf, got {p}")
    if polar_resolution is None:
        polar_resolution = 4 * n
    grid = build_grid(d, polar_resolution)
    if p == math.inf:
        return float(np.max(grid.ring_radius) ** n)
    mod_p = grid.ring_radius ** (n * p)
    total = float(np.sum(grid.ring_weight * grid.azimuth_count * mod_p))
    return total ** (1.0 / p)


class SzegoRegime(str, Enum):
    GROWTH = "GROWTH"
    LOG = "LOG"
    FLAT = "FLAT"


def szego_integral(n, alpha, beta, mu, p):
    """int_0^1 (1-t)^mu |P_n^{(alpha,beta)}(t)|^p dt and its regime.

    The regime follows the sign of 2 mu - ((2 alpha + 1) p / 2 - 2):
    negative means the endpoint concentration wins (value ~ n^{alpha p -
    2 mu - 2}, GROWTH), zero is the critical n^{-p/2} log n case (LOG),
    positive leaves the oscillatory plateau n^{-p/2} (FLAT).

    Quadrature: panels split at the exact Jacobi zeros so |.|^p has no
    interior kinks, Gauss-Legendre inside each panel, and the endpoint
    panel at t = 1 is regularized by u = (1-t)^{mu+1}.
    """
    if n < 1 or n != int(n):
        raise DomainError(f"degree must be a positive integer, got {n}")
    if not (alpha > -1.0 and beta > -1.0 and mu > -1.0):
        raise DomainError(
            f"need alpha, beta, mu > -1, got ({alpha}, {beta}, {mu})"
        )
    if p <= 0:
        raise DomainError(f"need p > 0, got {p}")
    params = JacobiParams(int(n), alpha, beta)
    zeros = scipy.special.roots_jacobi(int(n), alpha, beta)[0]
    cuts = np.concatenate(([0.0], zeros[(zeros > 0.0) & (zeros < 1.0)]))
    gl_x, gl_w = np.polynomial.legendre.leggauss(24)
    value = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        t = a + (b - a) * (gl_x + 1.0) / 2.0
        ft = (1.0 - t) ** mu * np.abs(jacobi_eval(params, t)) ** p
        value += (b - a) / 2.0 * float(np.sum(gl_w * ft))
    # endpoint panel [last zero, 1]: substitute u = (1-t)^{mu+1}
    top = (1.0 - cuts[-1]) ** (mu + 1.0)
    u = top * (gl_x + 1.0) / 2.0
    t = 1.0 - u ** (1.0 / (mu + 1.0))
    fu = np.abs(jacobi_eval(params, t)) ** p
    value += top / 2.0 / (mu + 1.0) * float(np.sum(gl_w * fu))
    disc = 2.0 * mu - ((2.0 * alpha + 1.0) / 2.0 * p - 2.0)
    if abs(disc) <= 1e-12:
        regime = SzegoRegime.LOG
    elif disc < 0.0:
        regime = SzegoRegime.GROWTH
    else:
        regime = SzegoRegime.FLAT
    return value, regime
