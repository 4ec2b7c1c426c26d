"""Phase-function laboratory: scaled arccos phases, their flat limits,
curvature condition checks, and the decay experiment for the oscillatory
pair operator.

The scaled phases psi_eps and phi_eps converge to sqrt(2 theta) and to
the distance |x - y| as eps -> 0; the module measures the convergence
constants so tests can assert they stay stable under eps halving.  The
curvature checker differentiates an arbitrary phase numerically and
reports the rank and ellipticity structure that the decay theory needs.
The decay experiment drives a phase-matched witness bank through the
oscillatory operator and fits the q-norm ratio against lambda.
"""

import math
from dataclasses import dataclass

import numpy as np

from projlab.errors import (
    ConditioningError,
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)
from projlab.normlab import fit_exponent

# Largest eps the flat-limit lemmas are probed at; small enough that the
# arccos argument stays inside its domain on the whole probe range.
MAX_EPSILON = 1.0 / 16.0

THETA_LOW = 2.0**-8
THETA_HIGH = 2.0**8
SEPARATION_LOW = 2.0**-3
SEPARATION_HIGH = 2.0**3

_WINDOW_HALF = 0.2


def psi_eps(eps, theta):
    """eps^{-1} * arccos(1 - eps^2 theta) on [2^-8, 2^8]; tends to
    sqrt(2 theta) as eps -> 0."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    t = np.asarray(theta, dtype=float)
    if np.any(t < THETA_LOW) or np.any(t > THETA_HIGH):
        raise DomainError("theta outside [2^-8, 2^8]")
    if np.any(eps * eps * t >= 2.0):
        raise DomainError("eps^2 theta >= 2 leaves the arccos domain")
    out = np.arccos(1.0 - eps * eps * t) / eps
    return float(out) if np.isscalar(theta) else out


def psi_deviation(eps, order=0, samples=8193):
    """Sup over a uniform theta grid of the order-th divided difference
    of psi_eps - sqrt(2 theta); the measured convergence constant is this
    divided by eps."""
    if order not in (0, 1, 2):
        raise UsageError(f"order must be 0, 1, or 2, got {order}")
    if samples < 16:
        raise UsageError("need at least 16 samples")
    theta = np.linspace(THETA_LOW, THETA_HIGH, samples)
    rem = psi_eps(eps, theta) - np.sqrt(2.0 * theta)
    step = theta[1] - theta[0]
    for _ in range(order):
        rem = np.diff(rem) / step
    return float(np.abs(rem).max())


def _point_batch(x, name):
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise UsageError(f"{name} must be a point or an array of points")
    if not np.all(np.isfinite(pts)):
        raise DomainError(f"{name} must be finite")
    return pts, single


def _phi_core(eps, dot, x_sq, y_sq):
    """arccos form of the scaled geodesic phase from precomputed products;
    no separation validation."""
    radicand = (1.0 - eps * eps * x_sq) * (1.0 - eps * eps * y_sq)
    if np.any(radicand < 0.0):
        raise DomainError("square-root argument negative: eps|x| or eps|y| >= 1")
    arg = eps * eps * dot + np.sqrt(radicand)
    return np.arccos(np.clip(arg, -1.0, 1.0)) / eps


def phi_eps(eps, x, y):
    """Scaled geodesic distance; tends to |x - y| as eps -> 0 on the
    separation band [2^-3, 2^3]."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    xs, single_x = _point_batch(x, "x")
    ys, single_y = _point_batch(y, "y")
    if xs.shape != ys.shape:
        raise UsageError("x and y must have matching shapes")
    sep = np.linalg.norm(xs - ys, axis=1)
    if np.any(sep < SEPARATION_LOW) or np.any(sep > SEPARATION_HIGH):
        raise DomainError("separation |x - y| outside [2^-3, 2^3]")
    out = _phi_core(
        eps,
        np.sum(xs * ys, axis=1),
        np.sum(xs * xs, axis=1),
        np.sum(ys * ys, axis=1),
    )
    return float(out[0]) if (single_x and single_y) else out


@dataclass(frozen=True)
class PhaseProbe:
    """A fixed eps and a set of (x, y) pairs on the separation band."""

    epsilon: float
    base_points: tuple

    def __post_init__(self):
        if not 0.0 < self.epsilon <= MAX_EPSILON:
            raise DomainError(
                f"epsilon must lie in (0, {MAX_EPSILON}], got {self.epsilon}"
            )
        pairs = tuple(
            (np.asarray(x, dtype=float), np.asarray(y, dtype=float))
            for x, y in self.base_points
        )
        if not pairs:
            raise UsageError("probe needs at least one point pair")
        for x, y in pairs:
            sep = float(np.linalg.norm(x - y))
            if not SEPARATION_LOW <= sep <= SEPARATION_HIGH:
                raise DomainError(f"probe pair separation {sep} outside band")
            if self.epsilon * max(np.linalg.norm(x), np.linalg.norm(y)) >= 1.0:
                raise DomainError("probe point outside the eps chart")
        object.__setattr__(self, "base_points", pairs)


def random_probe(eps, d=2, count=64, seed=1):
    """Probe with log-uniform separations across the band."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(count):
        x = rng.normal(size=d)
        x *= rng.uniform(0.0, 3.0) / max(np.linalg.norm(x), 1e-12)
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        sep = np.exp(rng.uniform(np.log(SEPARATION_LOW * 1.05),
                                 np.log(SEPARATION_HIGH * 0.95)))
        pairs.append((x, x + sep * direction))
    return PhaseProbe(eps, tuple(pairs))


def phi_probe_deviation(probe, fd_step=1e-6):
    """(sup |phi_eps - |x-y||, sup |fd-gradient of phi_eps - unit chord|)
    over the probe; both are O(eps) and the ratios to eps are the
    measured convergence constants."""
    eps = probe.epsilon
    value_sup = 0.0
    grad_sup = 0.0
    for x, y in probe.base_points:
        sep = np.linalg.norm(x - y)
        value_sup = max(value_sup, abs(phi_eps(eps, x, y) - sep))
        grad = np.empty_like(x)
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = fd_step
            grad[k] = (phi_eps(eps, x + e, y) - phi_eps(eps, x - e, y)) / (
                2.0 * fd_step
            )
        grad_sup = max(grad_sup, float(np.linalg.norm(grad - (x - y) / sep)))
    return value_sup, grad_sup


def sphere_phase(u):
    """Geodesic phase of the unit sphere in slice coordinates at height u:
    callable (x, z) -> arccos(xbar.z + v sqrt(1-|z|^2-u^2)
    + u sqrt(1-|x|^2)) with x = (xbar, v)."""
    if not -1.0 < u < 1.0:
        raise DomainError(f"height u must lie in (-1, 1), got {u}")

    def phase(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if z.size != x.size - 1:
            raise UsageError("z must have one fewer coordinate than x")
        cap_z = 1.0 - z @ z - u * u
        cap_x = 1.0 - x @ x
        if cap_z < 0.0 or cap_x < 0.0:
            raise DomainError("slice coordinates leave the sphere")
        val = x[:-1] @ z + x[-1] * math.sqrt(cap_z) + u * math.sqrt(cap_x)
        if not -1.0 <= val <= 1.0:
            raise DomainError("phase argument outside the arccos domain")
        return math.acos(val)

    return phase


def frozen_distance_phase(y_last):
    """Distance phase |x - (z, y_last)| with the last source coordinate
    frozen; the closed-form elliptic example."""

    def phase(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        if z.size != x.size - 1:
            raise UsageError("z must have one fewer coordinate than x")
        return math.sqrt(np.sum((x[:-1] - z) ** 2) + (x[-1] - y_last) ** 2)

    return phase


@dataclass(frozen=True)
class CsReport:
    """Curvature-condition summary at one base point."""

    rank: int
    rank_ok: bool
    null_direction: np.ndarray
    hessian_eigs: np.ndarray
    elliptic: bool
    mixed_hessian: np.ndarray


def _mixed_fd(phase, x0, z0, h):
    d = x0.size
    m = z0.size
    out = np.empty((d, m))
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        for j in range(m):
            ej = np.zeros(m)
            ej[j] = h
            out[i, j] = (
                phase(x0 + ei, z0 + ej)
                - phase(x0 + ei, z0 - ej)
                - phase(x0 - ei, z0 + ej)
                + phase(x0 - ei, z0 - ej)
            ) / (4.0 * h * h)
    return out


def _directional_hessian(phase, x0, z0, v, h):
    d = x0.size
    m = z0.size

    def slope(z):
        total = 0.0
        for i in range(d):
            ei = np.zeros(d)
            ei[i] = h
            total += v[i] * (phase(x0 + ei, z) - phase(x0 - ei, z)) / (2.0 * h)
        return total

    out = np.empty((m, m))
    for j in range(m):
        ej = np.zeros(m)
        ej[j] = h
        out[j, j] = (slope(z0 + ej) - 2.0 * slope(z0) + slope(z0 - ej)) / (h * h)
        for k in range(j + 1, m):
            ek = np.zeros(m)
            ek[k] = h
            out[j, k] = out[k, j] = (
                slope(z0 + ej + ek)
                - slope(z0 + ej - ek)
                - slope(z0 - ej + ek)
                + slope(z0 - ej - ek)
            ) / (4.0 * h * h)
    return out


def _richardson(fd, h):
    """Fourth-order value from second-order stencils at h and 2h, with a
    consistency guard against truncation or roundoff dominating."""
    fine = fd(h)
    coarse = fd(2.0 * h)
    refined = (4.0 * fine - coarse) / 3.0
    scale = np.linalg.norm(refined)
    if np.linalg.norm(fine - coarse) > 0.25 * scale + 1e-9:
        raise ConditioningError(
            f"finite differencing at step {h} is outside the stable window"
        )
    return refined


def cs_condition_check(phase, x0, z0, h=1e-4):
    """Differentiate the phase at (x0, z0) and report the curvature
    structure: rank of the mixed Hessian, the null direction v, and the
    eigenvalues of the directional Hessian of v . grad_x phase.

    rank_ok means the mixed Hessian has full rank d-1 at tolerance
    1e-6 * |matrix|; elliptic means the directional Hessian eigenvalues
    are nonzero and share one sign.
    """
    if not h > 0:
        raise UsageError(f"step must be positive, got {h}")
    x0 = np.asarray(x0, dtype=float)
    z0 = np.asarray(z0, dtype=float)
    if x0.ndim != 1 or z0.ndim != 1 or z0.size != x0.size - 1:
        raise UsageError("need x0 in R^d and z0 in R^{d-1}")
    mixed = _richardson(lambda s: _mixed_fd(phase, x0, z0, s), h)
    singular = np.linalg.svd(mixed, compute_uv=False)
    tol = 1e-6 * singular[0]
    rank = int(np.sum(singular > tol))
    rank_ok = rank == z0.size
    u_frame, _, _ = np.linalg.svd(mixed)
    null = u_frame[:, -1]
    pivot = int(np.argmax(np.abs(null)))
    if null[pivot] < 0.0:
        null = -null
    # the curvature stage nests three stencils, so its roundoff floor is
    # machine/h^3; balancing that against the h^4 truncation puts the
    # optimum near machine^{1/7}, which h^{4/7} hits at the default step
    curvature_step = h ** (4.0 / 7.0)
    hess = _richardson(
        lambda s: _directional_hessian(phase, x0, z0, null, s), curvature_step
    )
    eigs = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    nonzero = np.abs(eigs) > 1e-6 * np.abs(eigs).max()
    elliptic = bool(
        rank_ok and nonzero.all() and (np.all(eigs > 0.0) or np.all(eigs < 0.0))
    )
    return CsReport(
        rank=rank,
        rank_ok=rank_ok,
        null_direction=null,
        hessian_eigs=eigs,
        elliptic=elliptic,
        mixed_hessian=mixed,
    )


def smooth_cutoff(t):
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    lower = np.zeros_like(t)
    upper = np.zeros_like(t)
    inside = (t > 0.0) & (t < 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        lower[inside] = np.exp(-1.0 / t[inside])
        upper[inside] = np.exp(-1.0 / (1.0 - t[inside]))
    out = np.where(t >= 1.0, 1.0, 0.0)
    out[inside] = lower[inside] / (lower[inside] + upper[inside])
    return out


def _pair_amplitude(separation):
    """Smooth amplitude supported on separations [1/4, 4], flat on
    [0.3, 3.5]."""
    t = np.asarray(separation, dtype=float)
    return smooth_cutoff((t - 0.25) / 0.05) * smooth_cutoff((4.0 - t) / 0.5)


class AnnulusWitness:
    """Phase-matched annular source: modulus is a smooth radial bump on
    [inner, outer] and the phase cancels the operator's phase at the
    anchor, so the image peaks there and the q-norm ratio tracks the
    operator's decay rate rather than the source's smoothness.

    With the anchor at the origin both modulus and phase are radial, and
    so is the operator image; is_radial marks that the image norm may be
    taken on a single spoke.
    """

    def __init__(self, eps, inner, outer, taper, anchor=(0.0, 0.0)):
        if not 0.0 < inner < outer:
            raise DomainError("need 0 < inner < outer")
        if not 0.0 < taper < inner:
            raise DomainError("taper must be positive and below inner")
        anchor = np.asarray(anchor, dtype=float)
        lo = inner - taper - np.linalg.norm(anchor)
        hi = outer + taper + np.linalg.norm(anchor)
        if lo < SEPARATION_LOW or hi > SEPARATION_HIGH:
            raise DomainError("annulus leaves the phase separation band")
        self.eps = eps
        self.inner = inner
        self.outer = outer
        self.taper = taper
        self.anchor = anchor
        self.is_radial = bool(np.all(anchor == 0.0))

    def support_nodes(self, lam):
        """Polar quadrature over the annulus; the azimuth count tracks
        lambda because the matched phase still oscillates at wavenumber
        up to ~lambda across the support."""
        radial_nodes, radial_weights = np.polynomial.legendre.leggauss(24)
        lo = self.inner - self.taper
        hi = self.outer + self.taper
        radius = 0.5 * (hi + lo) + 0.5 * (hi - lo) * radial_nodes
        radial_weights = 0.5 * (hi - lo) * radial_weights
        count = int(math.ceil(1.5 * lam * self.outer)) + 96
        angle = 2.0 * np.pi * np.arange(count) / count
        pts = np.stack(
            [
                np.outer(radius, np.cos(angle)).ravel(),
                np.outer(radius, np.sin(angle)).ravel(),
            ],
            axis=1,
        )
        weights = np.outer(radius * radial_weights,
                           np.full(count, 2.0 * np.pi / count)).ravel()
        return pts, weights

    def modulus(self, pts):
        r = np.linalg.norm(np.asarray(pts, dtype=float), axis=-1)
        return smooth_cutoff((r - self.inner) / self.taper) * smooth_cutoff(
            (self.outer - r) / self.taper
        )

    def __call__(self, lam, pts):
        pts = np.asarray(pts, dtype=float)
        dot = pts @ self.anchor
        matched = _phi_core(
            self.eps,
            dot,
            np.sum(pts * pts, axis=-1),
            np.full(pts.shape[0], self.anchor @ self.anchor),
        )
        return self.modulus(pts) * np.exp(-1j * lam * matched)


def oscillatory_witness_bank(eps):
    """Two phase-matched annuli inside the amplitude's flat region."""
    return [
        AnnulusWitness(eps, 0.40, 0.55, 0.03),
        AnnulusWitness(eps, 0.70, 1.00, 0.05),
    ]


def _apply_at(eps, lam, witness, xs):
    """Pair-operator image at the points xs."""
    ys, wy = witness.support_nodes(lam)
    source = wy * witness(lam, ys)
    y_sq = np.sum(ys * ys, axis=1)
    eps_sq = eps * eps
    out = np.empty(xs.shape[0], dtype=complex)
    chunk = max(1, 2**23 // ys.shape[0])
    for start in range(0, xs.shape[0], chunk):
        xb = xs[start : start + chunk]
        dot = xb @ ys.T
        x_sq = np.sum(xb * xb, axis=1)
        sep_sq = x_sq[:, None] - 2.0 * dot + y_sq[None, :]
        amp = _pair_amplitude(np.sqrt(np.maximum(sep_sq, 0.0)))
        radicand = (1.0 - eps_sq * x_sq)[:, None] * (1.0 - eps_sq * y_sq)[None, :]
        phase = np.arccos(np.clip(eps_sq * dot + np.sqrt(radicand), -1.0, 1.0))
        out[start : start + chunk] = (amp * np.exp((1j * lam / eps) * phase)) @ source
    return out


def _image_norm(eps, lam, witness, q, step):
    """L^q norm of the image over the disk of radius _WINDOW_HALF around
    the anchor.  A witness that is radial about the origin has a radial
    image (rotate the integration variable), so one spoke suffices; the
    general path walks the full planar grid with the disk mask."""
    count = int(math.ceil(_WINDOW_HALF / step))
    if getattr(witness, "is_radial", False):
        # a spoke is cheap, so refine past the resolution rule; the
        # trapezoid error at the bare step would dominate the rim error
        # of the planar mask
        fine = step / 4.0
        radius = fine * np.arange(4 * count + 1)
        spoke = np.stack([radius, np.zeros_like(radius)], axis=1)
        values = _apply_at(eps, lam, witness, spoke)
        ring = np.abs(values) ** q * radius
        ring_weights = np.full(radius.size, fine)
        ring_weights[0] = ring_weights[-1] = 0.5 * fine
        return float(2.0 * np.pi * np.sum(ring_weights * ring)) ** (1.0 / q)
    axis = step * np.arange(-count, count + 1)
    xs = np.stack(np.meshgrid(axis, axis, indexing="ij"), -1).reshape(-1, 2)
    xs = xs[np.linalg.norm(xs, axis=1) <= _WINDOW_HALF + 1e-12]
    values = _apply_at(eps, lam, witness, xs + witness.anchor)
    return float(np.sum(np.abs(values) ** q) * step * step) ** (1.0 / q)


def _witness_ratio(eps, lam, witness, pt, step):
    image_norm = _image_norm(eps, lam, witness, 1.0 / pt.y, step)
    ys, wy = witness.support_nodes(lam)
    p = 1.0 / pt.x
    source_norm = float(np.sum(wy * witness.modulus(ys) ** p)) ** (1.0 / p)
    return image_norm / source_norm


def _decay_step(lam, grid_step):
    limit = 1.0 / (4.0 * lam)
    if grid_step is None:
        return limit
    if grid_step > limit * (1.0 + 1e-12):
        raise ResolutionError(
            f"grid step {grid_step} under-resolves oscillation at lambda {lam}"
        )
    return grid_step


def _check_decay_args(d, eps, lambda_list, pt):
    if d != 2:
        raise UnsupportedFeatureError("decay experiment is implemented for d = 2")
    if not 0.0 < eps <= MAX_EPSILON:
        raise DomainError(f"eps must lie in (0, {MAX_EPSILON}], got {eps}")
    lams = sorted(float(l) for l in set(lambda_list))
    if any(l < 1.0 for l in lams):
        raise DomainError("lambda must be >= 1")
    if not (0.0 < pt.x <= 1.0 and 0.0 < pt.y <= 1.0):
        raise DomainError("endpoint exponents are not supported here")
    return lams


def decay_table(d, eps, lambda_list, pt, f_bank=None, grid_step=None):
    """Rows (lambda, witness_index, ratio) of the measured q-to-p norm
    ratio per bank member."""
    lams = _check_decay_args(d, eps, lambda_list, pt)
    bank = oscillatory_witness_bank(eps) if f_bank is None else list(f_bank)
    if not bank:
        raise UsageError("witness bank is empty")
    rows = []
    for lam in lams:
        step = _decay_step(lam, grid_step)
        for k, witness in enumerate(bank):
            rows.append((lam, k, _witness_ratio(eps, lam, witness, pt, step)))
    return rows


def t_lambda_eps_decay(d, eps, lambda_list, pt, f_bank=None, grid_step=None):
    """Fit of the best witness ratio against lambda; the slope estimates
    the operator's decay exponent at (1/p, 1/q) = pt."""
    rows = decay_table(d, eps, lambda_list, pt, f_bank, grid_step)
    best = {}
    for lam, _, ratio in rows:
        best[lam] = max(best.get(lam, 0.0), ratio)
    return fit_exponent(sorted(best.items()))
