"""Quadrature grids on S^d and norms of grid functions.

Grids are products of Gauss rules in each polar cosine with a uniform
azimuth circle.  Every grid is stored by rings: all nodes of a ring share
the last d-1 coordinates and sweep the azimuth angle uniformly, so the
inner product of any two nodes depends on the azimuth offset only through
its cosine.  The projection module leans on that structure; everything
here works from the flat node list.

The polar factor of S^k carries weight (1-u^2)^{(k-2)/2}, so the matching
Gauss rule is Gauss-Jacobi with alpha = beta = (k-2)/2 (Gauss-Legendre
for k = 2).  That keeps the advertised polynomial exactness at every
level, including the half-integer weight of odd-dimensional factors.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from projlab.errors import ConfigurationError, DomainError, UsageError

SUPPORTED_DIMS = (2, 3, 4)


def surface_area(d):
    """sigma(S^d) = 2 pi^{(d+1)/2} / Gamma((d+1)/2)."""
    return 2.0 * math.pi ** ((d + 1) / 2.0) / math.gamma((d + 1) / 2.0)


def _polar_rule(weight_exponent_doubled, count):
    """Nodes/weights for integral of f(u) (1-u^2)^{k/2} du on [-1,1], k doubled."""
    k2 = weight_exponent_doubled
    if k2 == 0:
        return np.polynomial.legendre.leggauss(count)
    if k2 == 1:
        # Chebyshev (second kind) rule in closed form.
        i = np.arange(1, count + 1)
        theta = i * np.pi / (count + 1)
        return np.cos(theta), (np.pi / (count + 1)) * np.sin(theta) ** 2
    return scipy.special.roots_jacobi(count, k2 / 2.0, k2 / 2.0)


@dataclass
class SphereGrid:
    """Ring-structured quadrature grid on S^d (or a polar cap of it).

    ring_radius[k] is the common distance of ring k's nodes from the
    azimuth plane's axis; ring_rest[k] holds the shared trailing d-1
    coordinates; ring_weight[k] is the per-node weight.  Node (k, j) is
    (ring_radius[k] cos phi_j, ring_radius[k] sin phi_j, *ring_rest[k])
    with phi_j = 2 pi j / azimuth_count, flattened row-major.
    """

    d: int
    polar_resolution: int
    azimuth_count: int
    ring_radius: np.ndarray
    ring_rest: np.ndarray
    ring_weight: np.ndarray
    cap_angle: float | None = None
    _nodes: np.ndarray | None = field(default=None, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_rings(self):
        return len(self.ring_radius)

    @property
    def size(self):
        return self.n_rings * self.azimuth_count

    @property
    def azimuth_angles(self):
        return 2.0 * np.pi * np.arange(self.azimuth_count) / self.azimuth_count

    @property
    def nodes(self):
        if self._nodes is None:
            phi = self.azimuth_angles
            out = np.empty((self.n_rings, self.azimuth_count, self.d + 1))
            out[:, :, 0] = self.ring_radius[:, None] * np.cos(phi)[None, :]
            out[:, :, 1] = self.ring_radius[:, None] * np.sin(phi)[None, :]
            out[:, :, 2:] = self.ring_rest[:, None, :]
            self._nodes = out.reshape(self.size, self.d + 1)
        return self._nodes

    @property
    def weights(self):
        if self._weights is None:
            self._weights = np.repeat(self.ring_weight, self.azimuth_count)
        return self._weights


def _rings(d, res):
    """Ring data for the full product grid on S^d with azimuth excluded."""
    # S^1 seed: a single ring of radius 1, all trailing coordinates empty.
    radius = np.ones(1)
    rest = np.zeros((1, 0))
    weight = np.ones(1)
    for k in range(2, d + 1):
        u, w = _polar_rule(k - 2, res)
        s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
        radius = (radius[:, None] * s[None, :]).ravel()
        new_rest = np.empty((rest.shape[0], len(u), rest.shape[1] + 1))
        new_rest[:, :, : rest.shape[1]] = rest[:, None, :] * s[None, :, None]
        new_rest[:, :, -1] = u[None, :]
        rest = new_rest.reshape(-1, rest.shape[1] + 1)
        weight = (weight[:, None] * w[None, :]).ravel()
    return radius, rest, weight


def build_grid(d, polar_resolution):
    """Product quadrature grid on S^d, exact on polynomials of degree
    <= 2 polar_resolution - 1."""
    if d not in SUPPORTED_DIMS:
        raise ConfigurationError(f"unsupported sphere dimension d={d}")
    if polar_resolution < 4:
        raise DomainError(f"polar_resolution must be >= 4, got {polar_resolution}")
    azimuth = 2 * polar_resolution
    radius, rest, weight = _rings(d, polar_resolution)
    weight = weight * (2.0 * np.pi / azimuth)
    return SphereGrid(
        d=d,
        polar_resolution=polar_resolution,
        azimuth_count=azimuth,
        ring_radius=radius,
        ring_rest=rest,
        ring_weight=weight,
    )


def build_cap_grid(d, polar_resolution, cap_angle, azimuth_count=None, pole="south"):
    """Quadrature grid on the polar cap {arccos(xi . (0,..,0,-+1)) <= cap_angle}.

    Gauss-Legendre in the last polar cosine restricted to the cap interval
    (with the surface-measure factor folded into the weights), full product
    grid in the remaining directions.  For d = 2 the folded factor is 1 and
    the rule converges spectrally for smooth integrands.
    """
    if d not in SUPPORTED_DIMS:
        raise ConfigurationError(f"unsupported sphere dimension d={d}")
    if not 0.0 < cap_angle <= math.pi:
        raise DomainError(f"cap_angle must be in (0, pi], got {cap_angle}")
    if pole not in ("south", "north"):
        raise ConfigurationError(f"pole must be south or north, got {pole}")
    if azimuth_count is None:
        azimuth_count = 2 * polar_resolution
    if d == 2:
        radius = np.ones(1)
        rest = np.zeros((1, 0))
        weight = np.ones(1)
    else:
        radius, rest, weight = _rings(d - 1, polar_resolution)
    x, w = np.polynomial.legendre.leggauss(polar_resolution)
    if pole == "south":
        lo, hi = -1.0, -math.cos(cap_angle)
    else:
        lo, hi = math.cos(cap_angle), 1.0
    u = lo + (hi - lo) * (x + 1.0) / 2.0
    wu = w * (hi - lo) / 2.0
    if d > 2:
        wu = wu * (1.0 - u * u) ** ((d - 2) / 2.0)
    s = np.sqrt(np.clip(1.0 - u * u, 0.0, None))
    new_radius = (radius[:, None] * s[None, :]).ravel()
    new_rest = np.empty((rest.shape[0], len(u), rest.shape[1] + 1))
    new_rest[:, :, : rest.shape[1]] = rest[:, None, :] * s[None, :, None]
    new_rest[:, :, -1] = u[None, :]
    new_rest = new_rest.reshape(-1, rest.shape[1] + 1)
    new_weight = (weight[:, None] * wu[None, :]).ravel() * (2.0 * np.pi / azimuth_count)
    return SphereGrid(
        d=d,
        polar_resolution=polar_resolution,
        azimuth_count=azimuth_count,
        ring_radius=new_radius,
        ring_rest=new_rest,
        ring_weight=new_weight,
        cap_angle=cap_angle,
    )


@dataclass
class GridFunction:
    """Complex values attached to the nodes of a SphereGrid."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.size,):
            raise UsageError(
                f"expected {self.grid.size} values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DomainError("grid function values must be finite")

    def ring_view(self):
        """Values reshaped to (n_rings, azimuth_count); a view, not a copy."""
        return self.values.reshape(self.grid.n_rings, self.grid.azimuth_count)


@dataclass(frozen=True)
class LorentzIndex:
    r: float
    s: float

    def __post_init__(self):
        if not self.r > 0 or not self.s > 0:
            raise DomainError(f"Lorentz indices must be positive, got {self}")


def lp_norm(f: GridFunction, p):
    """(sum w |f|^p)^{1/p}; max |f| for p = inf."""
    if p != math.inf and p < 1:
        raise DomainError(f"lp_norm needs p >= 1, got {p}")
    mod = np.abs(f.values)
    if p == math.inf:
        return float(np.max(mod))
    return float(np.sum(f.grid.weights * mod**p) ** (1.0 / p))


def lorentz_norm(f: GridFunction, idx: LorentzIndex):
    """Lorentz functional of the weight-aware decreasing rearrangement.

    With f* constant m_i on measure blocks (T_{i-1}, T_i], the (r,s) norm
    is (sum m_i^s (T_i^{s/r} - T_{i-1}^{s/r}))^{1/s}, which collapses to
    lp_norm at s = r and to |E|^{1/r} on indicators.  s = inf takes the
    supremum of t^{1/r} f*(t) over right block endpoints.
    """
    r, s = idx.r, idx.s
    if r == math.inf:
        if s != math.inf:
            raise DomainError("Lorentz index (inf, s) with s < inf is degenerate")
        return float(np.max(np.abs(f.values)))
    mod = np.abs(f.values)
    order = np.argsort(-mod, kind="stable")
    m = mod[order]
    t = np.cumsum(f.grid.weights[order])
    if s == math.inf:
        return float(np.max(t ** (1.0 / r) * m))
    edges = np.concatenate(([0.0], t)) ** (s / r)
    return float(np.sum(m**s * np.diff(edges)) ** (1.0 / s))


def cap_indicator(grid: SphereGrid, center, rho):
    """Indicator of the geodesic cap of radius rho about a unit vector."""
    if not 0.0 < rho <= math.pi:
        raise DomainError(f"cap radius must be in (0, pi], got {rho}")
    center = np.asarray(center, dtype=float)
    if center.shape != (grid.d + 1,) or abs(np.linalg.norm(center) - 1.0) > 1e-10:
        raise DomainError("cap center must be a unit vector in R^{d+1}")
    inner = np.clip(grid.nodes @ center, -1.0, 1.0)
    values = (np.arccos(inner) <= rho).astype(complex)
    return GridFunction(grid, values)


def export_grid_csv(grid: SphereGrid, path):
    """Write (node coordinates..., weight) rows with a header."""
    header = [f"x{i}" for i in range(grid.d + 1)] + ["weight"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for node, w in zip(grid.nodes, grid.weights):
            writer.writerow([repr(float(c)) for c in node] + [repr(float(w))])
