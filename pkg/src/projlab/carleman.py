"""Weighted Laplace inequality on the punctured ball, reduced to the cylinder.

Conjugating the Laplacian on R^d by the radial weight |x|^(-tau) and
substituting t = -ln|x| turns the weighted inequality into a translation
invariant one on R x S^(d-1).  Per spherical mode of degree n the operator
becomes a constant-coefficient second-order ODE in t that factors into two
first-order pieces (d/dt + a1)(d/dt + a2) with

    a1 = n - tau~,   a2 = -(tau~ + n + d - 2),   tau~ = tau - d/q,

so its inverse is a pair of one-sided exponential convolutions.  Both the
factored composition and the equivalent partial-fraction sum are provided;
agreement between them is the main internal consistency check.

Numerics:

* t-derivatives use 4th-order stencils, switching to one-sided rows at the
  two outermost nodes per side.  Inverse outputs carry exponential tails out
  of the window, and a zero-extended stencil would read those as jumps.
* each resolvent is a linear recurrence (scipy lfilter) whose cell weights
  integrate the exponential kernel against the linear interpolant exactly;
  the small-z branch evaluates the weights by series.
* in the factored composition the second filter starts on the side where
  the first output's tail leaves the grid.  The tail is exactly exponential
  there, so the filter state is seeded with the closed-form tail integral
  edge/(|a1| + |a2|) instead of zero.
* the window must satisfy half_width * dist_floor >= 12 with supports in
  the inner half, which keeps the discarded tails below e^-6 and, with the
  seeded filter state, keeps the two inverse routes in agreement.

Mode pipelines are independent; every reduction is a plain loop over the
mode list, so results are deterministic.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from projlab.errors import (
    ConditioningError,
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)
from projlab.projection import random_harmonic
from projlab.sphere import GridFunction, build_grid, lp_norm

DEFAULT_DIST_FLOOR = 0.25
DEFAULT_T_STEP = 2.5e-4

_WINDOW_RATE = 12.0
_EDGE_FRACTION = 1e-2
_SERIES_CUTOFF = 1e-3
_NORM_CHUNK = 4096


def _fd_weights(offsets, order):
    """Stencil weights for the order-th derivative at offset 0, unit step."""
    offsets = np.asarray(offsets, dtype=float)
    rhs = np.zeros(len(offsets))
    rhs[order] = math.factorial(order)
    powers = offsets[None, :] ** np.arange(len(offsets))[:, None]
    return np.linalg.solve(powers, rhs)


_INTERIOR = {k: _fd_weights(range(-2, 3), k) for k in (1, 2)}
_EDGE = {
    k: [_fd_weights(range(0, 6), k), _fd_weights(range(-1, 5), k)] for k in (1, 2)
}


def _derivative(values, step, order):
    """4th-order derivative on a uniform grid, one-sided at the edges."""
    v = np.asarray(values)
    if v.ndim != 1 or v.size < 8:
        raise UsageError("derivative needs a 1D profile with at least 8 samples")
    out = np.empty(v.shape, dtype=np.result_type(v.dtype, float))
    w = _INTERIOR[order]
    acc = w[0] * v[: v.size - 4]
    for j in range(1, 5):
        acc = acc + w[j] * v[j : v.size - 4 + j]
    out[2:-2] = acc
    sign = (-1.0) ** order
    for i in (0, 1):
        out[i] = _EDGE[order][i] @ v[:6]
        out[-1 - i] = sign * (_EDGE[order][i] @ v[-6:][::-1])
    return out / step**order


@dataclass(frozen=True)
class CarlemanConfig:
    """Exponents, weight power, and time grid for the cylinder problem.

    The exponent pair must sit on the scaling line 1/p - 1/q = 2/d, and
    tau must keep its distance from Z + d/q at least dist_floor; every
    mode's two factor rates are then bounded away from zero by the same
    floor.
    """

    d: int
    tau: float
    p: float
    q: float
    t_grid: np.ndarray
    dist_floor: float

    def __post_init__(self):
        if self.d != int(self.d) or self.d < 3:
            raise DomainError(f"need integer dimension d >= 3, got {self.d}")
        if not (self.p >= 1 and self.q >= 1):
            raise DomainError("exponents must satisfy p, q >= 1")
        if abs(1.0 / self.p - 1.0 / self.q - 2.0 / self.d) > 1e-12:
            raise DomainError("exponents must satisfy 1/p - 1/q = 2/d")
        if not self.dist_floor > 0:
            raise DomainError("dist_floor must be positive")
        grid = np.asarray(self.t_grid, dtype=float)
        object.__setattr__(self, "t_grid", grid)
        if grid.ndim != 1 or grid.size < 16:
            raise UsageError("t_grid must be 1D with at least 16 nodes")
        steps = np.diff(grid)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise UsageError("t_grid must be uniform")
        frac = self.tau_tilde
        if abs(frac - round(frac)) < self.dist_floor - 1e-12:
            raise ConditioningError(
                f"tau = {self.tau} is within {self.dist_floor} of Z + d/q"
            )

    @property
    def tau_tilde(self):
        return self.tau - self.d / self.q

    @property
    def t_step(self):
        return float(self.t_grid[1] - self.t_grid[0])

    @property
    def half_width(self):
        return float(self.t_grid[-1] - self.t_grid[0]) / 2.0


def make_config(d, tau, p, q, dist_floor=DEFAULT_DIST_FLOOR, t_step=DEFAULT_T_STEP,
                half_width=None):
    """Config with a symmetric uniform grid; default width 12/dist_floor.

    A narrower half_width is fine for purely local operator checks, but
    inverse_L refuses it because the resolvent tails would not fit.
    """
    if not dist_floor > 0:
        raise DomainError("dist_floor must be positive")
    if half_width is None:
        half_width = _WINDOW_RATE / dist_floor
    cells = max(16, int(math.ceil(2.0 * half_width / t_step)))
    grid = np.linspace(-half_width, half_width, cells + 1)
    return CarlemanConfig(d=d, tau=tau, p=p, q=q, t_grid=grid, dist_floor=dist_floor)


@dataclass(frozen=True)
class CarlemanMode:
    """One spherical mode: degree, radial t-profile, angular part."""

    degree: int
    radial: np.ndarray
    harmonic: GridFunction

    def __post_init__(self):
        if self.degree != int(self.degree) or self.degree < 0:
            raise DomainError(f"mode degree must be a nonnegative integer, got {self.degree}")
        radial = np.asarray(self.radial)
        object.__setattr__(self, "radial", radial)
        if radial.ndim != 1:
            raise UsageError("radial profile must be one-dimensional")
        if not np.all(np.isfinite(radial)):
            raise DomainError("radial profile must be finite")


@dataclass(frozen=True)
class CarlemanProfile:
    """Finite sum of separated modes sharing one sphere grid."""

    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise UsageError("profile needs at least one mode")
        degrees = [m.degree for m in self.modes]
        if len(set(degrees)) != len(degrees):
            raise UsageError("mode degrees must be distinct")
        grid = self.modes[0].harmonic.grid
        length = self.modes[0].radial.size
        for m in self.modes[1:]:
            if m.harmonic.grid is not grid:
                raise UsageError("all modes must share one sphere grid")
            if m.radial.size != length:
                raise UsageError("all radial profiles must share one t-grid")

    @property
    def sphere_grid(self):
        return self.modes[0].harmonic.grid

    @property
    def degrees(self):
        return tuple(m.degree for m in self.modes)


def conjugated_polynomial(cfg, t):
    """Radial symbol t^2 - (2 tau + d - 2) t + tau (tau + d - 2)."""
    t = np.asarray(t, dtype=float)
    c = cfg.tau * (cfg.tau + cfg.d - 2)
    out = t * t - (2.0 * cfg.tau + cfg.d - 2.0) * t + c
    return float(out) if out.ndim == 0 else out


def _factor_rates(cfg, degree):
    tt = cfg.tau_tilde
    return degree - tt, -(tt + degree + cfg.d - 2)


def radial_operator(cfg, degree, radial):
    """Per-mode operator h -> h'' - (2 tau~ + d - 2) h' + c0 h on the grid.

    No support guard: callers that feed profiles with boundary mass (pure
    exponentials, window-filling tails) get the one-sided stencil rows.
    """
    radial = np.asarray(radial)
    if radial.shape != cfg.t_grid.shape:
        raise UsageError("radial profile does not match the config t_grid")
    a1, a2 = _factor_rates(cfg, degree)
    d2 = _derivative(radial, cfg.t_step, 2)
    d1 = _derivative(radial, cfg.t_step, 1)
    return d2 + (a1 + a2) * d1 + (a1 * a2) * radial


def _first_order_apply(values, alpha, step):
    return _derivative(values, step, 1) + alpha * np.asarray(values)


def _edge_guard(radial, label):
    peak = float(np.max(np.abs(radial)))
    if peak == 0.0:
        return
    edge = max(np.max(np.abs(radial[:2])), np.max(np.abs(radial[-2:])))
    if edge > _EDGE_FRACTION * peak:
        raise DomainError(f"{label} touches the time window boundary")


def apply_L(cfg, u):
    """Apply the conjugated operator mode by mode; angular parts untouched."""
    out = []
    for mode in u.modes:
        if mode.radial.shape != cfg.t_grid.shape:
            raise UsageError("profile does not match the config t_grid")
        _edge_guard(mode.radial, f"mode {mode.degree} support")
        out.append(
            CarlemanMode(
                degree=mode.degree,
                radial=radial_operator(cfg, mode.degree, mode.radial),
                harmonic=mode.harmonic,
            )
        )
    return CarlemanProfile(tuple(out))


def _cell_weights(z):
    """Exact integrals of the exponential kernel against the two linear
    hat samples over one cell, per unit step."""
    if z < _SERIES_CUTOFF:
        a = 0.5 - z / 3.0 + z * z / 8.0 - z**3 / 30.0
        b = 0.5 - z / 6.0 + z * z / 24.0 - z**3 / 120.0
    else:
        e = math.exp(-z)
        a = (1.0 - (1.0 + z) * e) / (z * z)
        b = (z - 1.0 + e) / (z * z)
    return a, b


def _resolvent(alpha, values, step, cont_rate=None):
    """(d/dt + alpha)^{-1} by causal (alpha > 0) or anticausal recurrence.

    cont_rate, when given, is the decay rate of the input's exponential
    continuation beyond the starting edge; the filter state is seeded with
    the closed-form tail integral so nothing is lost to the window cut.
    """
    z = abs(alpha) * step
    decay = math.exp(-z)
    a, b = _cell_weights(z)
    big_a, big_b = step * a, step * b
    x = values if alpha > 0 else values[::-1]
    edge = x[0] / (cont_rate + abs(alpha)) if cont_rate is not None else 0.0
    if alpha > 0:
        zi = np.asarray([edge - big_b * x[0]])
        out, _ = lfilter([big_b, big_a], [1.0, -decay], x, zi=zi)
        return out
    zi = np.asarray([-edge + big_b * x[0]])
    out, _ = lfilter([-big_b, -big_a], [1.0, -decay], x, zi=zi)
    return out[::-1]


def first_order_resolvent(alpha, values, t_step, dist_floor=DEFAULT_DIST_FLOOR):
    """Inverse of (d/dt + alpha) on grid samples, one-sided in t.

    For alpha > 0 the kernel integrates the past, for alpha < 0 the future
    with a sign flip; rates inside dist_floor are refused as ill-posed.
    """
    values = np.asarray(values)
    if values.ndim != 1 or values.size < 8:
        raise UsageError("resolvent needs a 1D profile with at least 8 samples")
    if not t_step > 0:
        raise DomainError("t_step must be positive")
    if abs(alpha) < dist_floor:
        raise ConditioningError(
            f"rate {alpha} inside the conditioning floor {dist_floor}"
        )
    return _resolvent(alpha, values, t_step)


def _mode_inverse(cfg, degree, radial, route):
    a1, a2 = _factor_rates(cfg, degree)
    if min(abs(a1), abs(a2)) < cfg.dist_floor - 1e-12:
        raise ConditioningError(
            f"mode {degree} sits within dist_floor of the spectrum"
        )
    if route == "factored":
        first = _resolvent(a1, radial, cfg.t_step)
        rate = abs(a1) if (a1 > 0) != (a2 > 0) else None
        return _resolvent(a2, first, cfg.t_step, cont_rate=rate)
    return (_resolvent(a2, radial, cfg.t_step) - _resolvent(a1, radial, cfg.t_step)) / (
        a1 - a2
    )


def inverse_L(cfg, u, route="factored"):
    """Invert the conjugated operator mode by mode.

    The factored route composes the two first-order resolvents; "partial"
    takes the difference of the two single-pole terms over the spectral
    gap a1 - a2.  Both need the full-size window so the exponential tails
    fit.
    """
    if route not in ("factored", "partial"):
        raise UsageError(f"unknown inverse route {route!r}")
    if cfg.half_width * cfg.dist_floor < _WINDOW_RATE - 1e-9:
        raise ResolutionError(
            "time window too short for the resolvent tails; "
            "need half_width >= 12/dist_floor"
        )
    out = []
    for mode in u.modes:
        if mode.radial.shape != cfg.t_grid.shape:
            raise UsageError("profile does not match the config t_grid")
        out.append(
            CarlemanMode(
                degree=mode.degree,
                radial=_mode_inverse(cfg, mode.degree, mode.radial, route),
                harmonic=mode.harmonic,
            )
        )
    return CarlemanProfile(tuple(out))


def inverse_route_gap(cfg, u):
    """Worst relative L2 gap between the two inverse routes over the modes."""
    worst = 0.0
    for mode in u.modes:
        fac = _mode_inverse(cfg, mode.degree, mode.radial, "factored")
        par = _mode_inverse(cfg, mode.degree, mode.radial, "partial")
        scale = float(np.linalg.norm(fac))
        if scale == 0.0:
            continue
        worst = max(worst, float(np.linalg.norm(fac - par)) / scale)
    return worst


def _trapezoid_weights(count, step):
    w = np.full(count, step)
    w[0] = w[-1] = step / 2.0
    return w


def _mixed_norm(cfg, u, exponent):
    """L^exponent norm over dt x dOmega; single modes factorize exactly."""
    tw = _trapezoid_weights(cfg.t_grid.size, cfg.t_step)
    if len(u.modes) == 1:
        h = u.modes[0].radial
        g = u.modes[0].harmonic
        if exponent == math.inf:
            return float(np.max(np.abs(h))) * lp_norm(g, math.inf)
        radial = float(np.sum(tw * np.abs(h) ** exponent) ** (1.0 / exponent))
        return radial * lp_norm(g, exponent)
    node_w = u.sphere_grid.weights
    profiles = np.stack([m.radial for m in u.modes])
    angular = np.stack([m.harmonic.values for m in u.modes])
    best = 0.0
    acc = 0.0
    for start in range(0, cfg.t_grid.size, _NORM_CHUNK):
        block = slice(start, start + _NORM_CHUNK)
        values = profiles[:, block].T @ angular
        if exponent == math.inf:
            best = max(best, float(np.max(np.abs(values))))
        else:
            powers = np.abs(values) ** exponent
            acc += float(np.sum(tw[block, None] * node_w[None, :] * powers))
    return best if exponent == math.inf else acc ** (1.0 / exponent)


def carleman_ratio(cfg, u):
    """Measured inequality ratio |u|_q / |L u|_p in the product norms."""
    numerator = _mixed_norm(cfg, u, cfg.q)
    if numerator == 0.0:
        raise DomainError("zero profile has no inequality ratio")
    denominator = _mixed_norm(cfg, apply_L(cfg, u), cfg.p)
    if denominator == 0.0:
        raise DomainError("operator annihilated the profile to grid precision")
    return numerator / denominator


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def _bank_shapes(x):
    return (
        _bump(x),
        x * _bump(x),
        _bump(2.0 * x + 0.8),
        _bump(3.0 * x - 1.5) + _bump(3.0 * x + 1.5),
        np.cos(4.0 * np.pi * x) * _bump(x),
    )


def profile_bank(cfg, sphere_grid, degrees=(2, 3, 4, 5), seed=7):
    """Fixed bank: five bump shapes times the given degrees, seeded angular
    parts; supports fill the inner half of the window.

    The default degrees are contiguous so that a tau sweep through their
    range keeps every tau at comparable distance from the nearest bank
    mode; with gaps in the degrees the per-tau maximum would measure bank
    coverage instead of tau dependence.
    """
    x = cfg.t_grid / (0.5 * cfg.half_width)
    bank = []
    for i, degree in enumerate(degrees):
        g = random_harmonic(sphere_grid.d, degree, sphere_grid, seed + 101 * i)
        for shape in _bank_shapes(x):
            bank.append(CarlemanProfile((CarlemanMode(degree, shape, g),)))
    return bank


def tau_sweep(d, p, q, taus, dist_floor=DEFAULT_DIST_FLOOR, t_step=DEFAULT_T_STEP,
              sphere_resolution=16, seed=7):
    """Best bank ratio per tau: rows (tau, ratio, worst_mode).

    The bank is built once and shared, so the sweep isolates the tau
    dependence of the measured constants.
    """
    taus = list(taus)
    if not taus:
        raise UsageError("tau sweep needs at least one value")
    base = make_config(d, taus[0], p, q, dist_floor=dist_floor, t_step=t_step)
    grid = build_grid(d - 1, sphere_resolution)
    bank = profile_bank(base, grid, seed=seed)
    rows = []
    for tau in taus:
        cfg = CarlemanConfig(d=d, tau=tau, p=p, q=q, t_grid=base.t_grid,
                             dist_floor=dist_floor)
        best = -math.inf
        worst_mode = None
        for u in bank:
            ratio = carleman_ratio(cfg, u)
            if ratio > best:
                best = ratio
                worst_mode = u.modes[0].degree
        rows.append((tau, best, worst_mode))
    return rows


def inverse_mode_norm(d, degree, dist, p, q, t_step=DEFAULT_T_STEP, seed=3):
    """L2 amplification of the inverse on one mode at spectral distance dist.

    The probe profile is a window-filling bump, so its width grows with
    1/dist and the measured norm tracks the resolvent's 1/dist blow-up
    rather than the fixed-input dist^(-1/2) tail effect.
    """
    if not 0 < dist <= 0.5:
        raise DomainError("spectral distance must lie in (0, 1/2]")
    tau = d / q + degree + dist
    cfg = make_config(d, tau, p, q, dist_floor=dist, t_step=t_step)
    grid = build_grid(d - 1, max(8, degree + 2))
    g = random_harmonic(d - 1, degree, grid, seed)
    shape = _bump(cfg.t_grid / (0.5 * cfg.half_width))
    u = CarlemanProfile((CarlemanMode(degree, shape, g),))
    inv = inverse_L(cfg, u)
    return _mixed_norm(cfg, inv, 2) / _mixed_norm(cfg, u, 2)


def _radial_laplacian(d, degree, radial, step):
    """Radial part of the plain Laplacian in t = -ln r coordinates, before
    any weight conjugation: h'' - (d-2) h' - n (n+d-2) h."""
    d2 = _derivative(radial, step, 2)
    d1 = _derivative(radial, step, 1)
    return d2 - (d - 2) * d1 - degree * (degree + d - 2) * radial


def weight_form_check(cfg, mode):
    """Evaluate the weighted inequality ratio two independent ways.

    The first ratio quadratures |x|^(-tau)-weighted norms of u and Delta u
    directly in radial-angular coordinates on the supporting annulus; the
    second substitutes into the cylinder form and reads carleman_ratio of
    the profile e^(tau~ t) h.  The two agree up to quadrature error.
    """
    if cfg.p == math.inf or cfg.q == math.inf:
        raise UnsupportedFeatureError("weight form check needs finite exponents")
    h = np.asarray(mode.radial)
    if h.shape != cfg.t_grid.shape:
        raise UsageError("profile does not match the config t_grid")
    support = np.nonzero(np.abs(h) > 0)[0]
    if support.size == 0:
        raise DomainError("zero profile has no inequality ratio")
    if support[-1] >= h.size - 2:
        raise DomainError("support reaches the origin r = 0")
    if support[0] <= 1:
        raise DomainError("support reaches r = infinity")
    t_lo = cfg.t_grid[max(0, support[0] - 2)]
    t_hi = cfg.t_grid[min(h.size - 1, support[-1] + 2)]

    radial_part = _radial_laplacian(cfg.d, mode.degree, h, cfg.t_step)
    nodes, gl_w = np.polynomial.legendre.leggauss(400)
    r_lo, r_hi = math.exp(-t_hi), math.exp(-t_lo)
    r = 0.5 * (r_hi - r_lo) * nodes + 0.5 * (r_hi + r_lo)
    w = 0.5 * (r_hi - r_lo) * gl_w
    t_of_r = -np.log(r)

    def at_r(samples):
        if np.iscomplexobj(samples):
            return np.interp(t_of_r, cfg.t_grid, samples.real) + 1j * np.interp(
                t_of_r, cfg.t_grid, samples.imag
            )
        return np.interp(t_of_r, cfg.t_grid, samples)

    lhs_rad = np.sum(w * r ** (cfg.d - 1 - cfg.tau * cfg.q) * np.abs(at_r(h)) ** cfg.q)
    rhs_rad = np.sum(
        w
        * r ** (cfg.d - 1 - (cfg.tau + 2) * cfg.p)
        * np.abs(at_r(radial_part)) ** cfg.p
    )
    weight_ratio = (lhs_rad ** (1.0 / cfg.q) * lp_norm(mode.harmonic, cfg.q)) / (
        rhs_rad ** (1.0 / cfg.p) * lp_norm(mode.harmonic, cfg.p)
    )

    conjugated = CarlemanProfile(
        (
            CarlemanMode(
                degree=mode.degree,
                radial=np.exp(cfg.tau_tilde * cfg.t_grid) * h,
                harmonic=mode.harmonic,
            ),
        )
    )
    return float(weight_ratio), carleman_ratio(cfg, conjugated)
