"""Numerical application of the degree-n projector H_n^d.

(H_n f)(zeta) = kappa * sum_i w_i Z_n(xi_i . zeta) f(xi_i) over the grid
nodes.  The sum is never materialized as a dense node-by-node kernel:
on a product grid the inner product between nodes on rings k and k'
depends on the azimuth angles only through their difference, so the
kernel restricted to a ring pair is a cosine polynomial of degree n.
Sampling it at 2n+2 offsets recovers its Fourier modes exactly, and the
azimuth sums become one contraction over rings per mode.  This is the
same quadrature sum reorganized by exact DFT identities, not an
approximation on top of it.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from projlab.errors import (
    CalibrationError,
    DomainError,
    ResolutionError,
    UsageError,
)
from projlab.specfun import jacobi_iter
from projlab.sphere import GridFunction, SphereGrid, lp_norm
from projlab.zonal import ZonalKernelTable, kappa_default, zonal_eval, zonal_norm_constant

# Past this degree the upward recurrence per apply costs more than a
# dense theta table; scans only need table accuracy anyway.
EXACT_DEGREE_LIMIT = 48

_CHUNK_POINTS = 6_000_000


@dataclass
class Projector:
    d: int
    n: int
    grid: SphereGrid
    kappa: float
    kernel: ZonalKernelTable | None = None
    mode: str = "exact"

    def __post_init__(self):
        if self.grid.d != self.d:
            raise UsageError(
                f"grid is S^{self.grid.d}, projector wants S^{self.d}"
            )
        if self.kappa <= 0:
            raise DomainError(f"kappa must be positive, got {self.kappa}")
        if self.grid.polar_resolution < self.n + 2:
            raise ResolutionError(
                f"polar resolution {self.grid.polar_resolution} cannot carry "
                f"degree {self.n}; need at least n + 2"
            )
        if self.mode not in ("exact", "table"):
            raise UsageError(f"unknown projector mode {self.mode!r}")
        if self.mode == "table" and self.kernel is None:
            raise UsageError("table mode needs a kernel table")


def make_projector(d, n, grid, mode="auto", kappa=None):
    """Build a projector; mode 'auto' picks exact recurrence for small n."""
    if mode == "auto":
        mode = "exact" if n <= EXACT_DEGREE_LIMIT else "table"
    kernel = ZonalKernelTable.build(d, n) if mode == "table" else None
    if kappa is None:
        kappa = kappa_default(d)
    return Projector(d=d, n=n, grid=grid, kappa=kappa, kernel=kernel, mode=mode)


def _cosine_weights(half_count, mode_count):
    """DFT-on-even-samples matrix: profile values at 2pi*delta/M' for
    delta = 0..M'/2 map to cosine modes 0..mode_count-1, M' = 2*half_count - 2."""
    m_prime = 2 * (half_count - 1)
    delta = np.arange(half_count)
    mat = np.cos(2.0 * np.pi * np.outer(delta, np.arange(mode_count)) / m_prime)
    mat *= 2.0 / m_prime
    mat[0, :] *= 0.5
    mat[-1, :] *= 0.5
    return mat


def _halfrange_modes(z, mode_count):
    """Cosine modes of an even profile from its half-range samples.

    Same linear map as _cosine_weights but through an rfft of the
    mirrored profile, which wins once the mode count is large (table-mode
    applies at scan degrees).
    """
    full = np.concatenate([z, z[..., -2:0:-1]], axis=-1)
    spec = np.fft.rfft(full, axis=-1).real
    return spec[..., :mode_count] * (1.0 / full.shape[-1])


def _ring_chunks(grid, half_count):
    k_total = grid.n_rings
    rows = max(1, _CHUNK_POINTS // max(1, k_total * half_count))
    for r0 in range(0, k_total, rows):
        yield r0, min(r0 + rows, k_total)


def _chunk_arguments(grid, r0, r1, cos_offsets):
    g = grid.ring_radius
    h = grid.ring_rest
    a = g[r0:r1, None] * g[None, :]
    b = h[r0:r1] @ h.T
    t = a[:, :, None] * cos_offsets[None, None, :] + b[:, :, None]
    np.clip(t, -1.0, 1.0, out=t)
    return t


def _mode_profile_stream(grid, d, nmax, table=None, degrees=None):
    """Yield (r0, r1, degree, Zhat) cosine-mode blocks of the kernel.

    Zhat[i, p, m] is the m-th cosine mode of Z_degree between output ring
    r0+i and source ring p.  With a table only degree nmax is produced;
    the exact path streams the recurrence once and emits every requested
    degree, all sampled at the shared M' = 2*nmax + 2 offsets.
    """
    if degrees is None:
        degrees = [nmax]
    wanted = set(degrees)
    half = nmax + 2
    cos_offsets = np.cos(np.pi * np.arange(half) / (nmax + 1))
    dft = _cosine_weights(half, nmax + 1)
    alpha = (d - 2) / 2.0
    for r0, r1 in _ring_chunks(grid, half):
        t = _chunk_arguments(grid, r0, r1, cos_offsets)
        if table is not None:
            z = table.eval(t)
            yield r0, r1, nmax, _halfrange_modes(z, nmax + 1)
            continue
        for deg, p in jacobi_iter(alpha, alpha, t, nmax):
            if deg not in wanted:
                continue
            z = zonal_norm_constant(d, deg) * p
            yield r0, r1, deg, z @ dft[:, : deg + 1]


def _azimuth_modes(grid, values, nmax):
    """Signed modes -nmax..nmax of f per ring, aliased mod M like the
    quadrature sum itself does."""
    m = grid.azimuth_count
    spectrum = np.fft.fft(values.reshape(grid.n_rings, m), axis=1) / m
    cols = np.arange(-nmax, nmax + 1) % m
    return spectrum[:, cols]


def _modes_to_values(grid, modes):
    n_side = (modes.shape[1] - 1) // 2
    m = grid.azimuth_count
    if m < 2 * n_side + 2:
        raise ResolutionError(
            f"azimuth count {m} cannot hold modes up to {n_side}"
        )
    spectrum = np.zeros((grid.n_rings, m), dtype=complex)
    spectrum[:, np.arange(-n_side, n_side + 1) % m] = modes
    return (np.fft.ifft(spectrum, axis=1) * m).reshape(-1)


def modes_l2_norm(grid, modes):
    """L2 norm of the grid function carried by signed azimuth modes."""
    per_ring = np.sum(np.abs(modes) ** 2, axis=1)
    total = float(np.sum(grid.ring_weight * grid.azimuth_count * per_ring))
    return math.sqrt(max(total, 0.0))


def _contract(acc, zhat, fw, r0, r1, degree, nmax):
    # acc columns are signed modes -nmax..nmax; mode +-m both read the
    # m-th cosine profile.
    center = nmax
    for m in range(degree + 1):
        cols = [center] if m == 0 else [center - m, center + m]
        block = zhat[:, :, m]
        for c in cols:
            acc[r0:r1, c] += block @ fw[:, c]


def project(p: Projector, f: GridFunction) -> GridFunction:
    """Apply H_n to a grid function living on the projector's grid."""
    if f.grid is not p.grid:
        raise UsageError("grid function does not live on the projector grid")
    n = p.n
    f_modes = _azimuth_modes(p.grid, f.values, n)
    fw = p.grid.ring_weight[:, None] * f_modes
    acc = np.zeros_like(f_modes)
    for r0, r1, deg, zhat in _mode_profile_stream(
        p.grid, p.d, n, table=p.kernel
    ):
        _contract(acc, zhat, fw, r0, r1, deg, n)
    acc *= p.kappa * p.grid.azimuth_count
    return GridFunction(p.grid, _modes_to_values(p.grid, acc))


def project_sweep(grid, nmax, fs, kappa=None):
    """All projections H_n f for n <= nmax and every f in fs, one pass.

    Returns modes[deg, i, ring, signed mode] with mode columns
    -nmax..nmax; degrees share one kernel recurrence stream, which is
    what makes the full (n, m) eigenfunction table affordable.  Use
    modes_l2_norm / function_from_modes to consume the result.
    """
    if kappa is None:
        kappa = kappa_default(grid.d)
    if grid.azimuth_count < 2 * nmax + 2:
        raise ResolutionError(
            f"azimuth count {grid.azimuth_count} cannot separate modes up to {nmax}"
        )
    count = len(fs)
    width = 2 * nmax + 1
    k_total = grid.n_rings
    fw = np.empty((count, k_total, width), dtype=complex)
    for i, f in enumerate(fs):
        if f.grid is not grid:
            raise UsageError("sweep inputs must live on the sweep grid")
        fw[i] = grid.ring_weight[:, None] * _azimuth_modes(grid, f.values, nmax)
    # ring-major stacking so each cosine mode contracts as one matmul
    fw_cols = fw.transpose(1, 0, 2).reshape(k_total, count * width)
    out = np.zeros((nmax + 1, k_total, count * width), dtype=complex)
    col_mode = np.tile(np.arange(-nmax, nmax + 1), count)
    groups = [np.nonzero(np.abs(col_mode) == m)[0] for m in range(nmax + 1)]
    for r0, r1, deg, zhat in _mode_profile_stream(
        grid, grid.d, nmax, degrees=range(nmax + 1)
    ):
        for m in range(deg + 1):
            cols = groups[m]
            # slice + fancy index puts the column axis first on the left
            out[deg, r0:r1, cols] = (zhat[:, :, m] @ fw_cols[:, cols]).T
    out *= kappa * grid.azimuth_count
    modes = out.reshape(nmax + 1, k_total, count, width).transpose(0, 2, 1, 3)
    return np.ascontiguousarray(modes)


def function_from_modes(grid, modes):
    """Materialize a GridFunction from signed azimuth modes."""
    return GridFunction(grid, _modes_to_values(grid, modes))


def project_pair_norm_ratio(p: Projector, f: GridFunction, lp, lq):
    """lp_norm(H_n f, q) / lp_norm(f, p): a lower bound on the operator
    norm up to quadrature error."""
    denom = lp_norm(f, lp)
    if denom == 0.0:
        raise DomainError("zero input has no norm ratio")
    return lp_norm(project(p, f), lq) / denom


def harmonic_from_translates(d, n, grid, centers, coeffs):
    """A degree-n harmonic as a combination of zonal translates
    sum_a c_a Z_n(eta_a . xi), evaluated on the grid."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    coeffs = np.asarray(coeffs, dtype=complex)
    if centers.shape[0] != coeffs.shape[0]:
        raise UsageError("one coefficient per translate center")
    norms = np.linalg.norm(centers, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise DomainError("translate centers must lie on the sphere")
    t = np.clip(grid.nodes @ centers.T, -1.0, 1.0)
    vals = np.zeros(grid.size, dtype=complex)
    for a in range(centers.shape[0]):
        vals += coeffs[a] * zonal_eval(d, n, t[:, a])
    return GridFunction(grid, vals)


def random_harmonic(d, n, grid, seed, translates=5):
    """Random degree-n harmonic from seeded zonal translates."""
    rng = np.random.default_rng(seed)
    centers = rng.normal(size=(translates, d + 1))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    coeffs = rng.normal(size=translates) + 1j * rng.normal(size=translates)
    return harmonic_from_translates(d, n, grid, centers, coeffs)


def random_bandlimited(d, degree, grid, seed):
    """Random function with harmonic content exactly up to the degree."""
    rng = np.random.default_rng(seed)
    vals = np.zeros(grid.size, dtype=complex)
    for k in range(degree + 1):
        vals += random_harmonic(d, k, grid, rng.integers(1 << 31)).values
    return GridFunction(grid, vals)


def grid_inner(f: GridFunction, g: GridFunction):
    """Quadrature inner product <f, g> with the second slot conjugated."""
    if f.grid is not g.grid:
        raise UsageError("inner product needs a shared grid")
    return complex(np.sum(f.grid.weights * f.values * np.conj(g.values)))


def calibrate(d, grid):
    """Fix kappa so the degree-1 projection reproduces degree-1 harmonics,
    then demand every low degree reproduce with the same constant."""
    if grid.polar_resolution < 4:
        raise DomainError("calibration needs polar resolution >= 4")
    kappa = _calibration_fit(d, grid, 1)
    for deg in (0, 2, 3):
        f = _calibration_harmonic(d, grid, deg)
        p = Projector(d=d, n=deg, grid=grid, kappa=kappa, mode="exact")
        residual = project(p, f).values - f.values
        rel = _l2(grid, residual) / _l2(grid, f.values)
        if rel > 1e-8:
            raise CalibrationError(
                f"kappa from degree 1 leaves degree {deg} residual {rel:.3e}; "
                "kernel and measure conventions disagree"
            )
    return kappa


def _calibration_harmonic(d, grid, deg):
    if deg == 0:
        return GridFunction(grid, np.ones(grid.size, dtype=complex))
    if deg == 1:
        return GridFunction(grid, grid.nodes[:, 0].astype(complex))
    eta = np.zeros(d + 1)
    eta[-1] = 1.0
    return harmonic_from_translates(d, deg, grid, [eta], [1.0])


def _calibration_fit(d, grid, deg):
    f = _calibration_harmonic(d, grid, deg)
    p = Projector(d=d, n=deg, grid=grid, kappa=1.0, mode="exact")
    raw = project(p, f).values
    scale = np.vdot(raw, raw).real
    if scale <= 0.0:
        raise CalibrationError("degenerate calibration input")
    return float(np.vdot(raw, f.values).real / scale)


def calibration_refit(d, grid, deg):
    """kappa refit from a single degree, for consistency probes."""
    return _calibration_fit(d, grid, deg)


def _l2(grid, values):
    return math.sqrt(float(np.sum(grid.weights * np.abs(values) ** 2)))


def ring_mode_tensor(p: Projector, dtype=np.float32):
    """Dense cosine-mode kernel Zhat[m, k, k'] for repeated applies.

    float32 by default: power iterations tolerate 1e-7 kernel noise and
    the full tensor at n=256 on a 4n-resolution grid is about 1 GB.
    """
    k_total = p.grid.n_rings
    out = np.empty((p.n + 1, k_total, k_total), dtype=dtype)
    for r0, r1, _, zhat in _mode_profile_stream(
        p.grid, p.d, p.n, table=p.kernel
    ):
        out[:, r0:r1, :] = zhat.transpose(2, 0, 1)
    return out


def apply_mode_tensor(p: Projector, tensor, f: GridFunction) -> GridFunction:
    """Apply H_n through a prebuilt ring_mode_tensor."""
    if f.grid is not p.grid:
        raise UsageError("grid function does not live on the projector grid")
    n = p.n
    fw = p.grid.ring_weight[:, None] * _azimuth_modes(p.grid, f.values, n)
    if tensor.dtype == np.float32:
        fw = fw.astype(np.complex64)
    acc = np.empty_like(fw)
    center = n
    for m in range(n + 1):
        block = tensor[m]
        acc[:, center + m] = block @ fw[:, center + m]
        if m:
            acc[:, center - m] = block @ fw[:, center - m]
    acc *= p.kappa * p.grid.azimuth_count
    return GridFunction(p.grid, _modes_to_values(p.grid, acc))
