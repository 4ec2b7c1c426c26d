"""Jacobi polynomials, Bessel functions, and log-gamma ratios.

Hand-rolled rather than delegated: every consumer in the package needs
behavior pinned down at specific parameter ranges (degrees to 2048,
orders to 20, arguments to 1e4), and the implementations double as the
independent evaluation path that the kernel-table and witness modules
cross-check against.
"""

import math
from dataclasses import dataclass

import numpy as np

from projlab.errors import DomainError

# Roundoff guard at the endpoints: cos(arccos x) can stray a few ulp
# outside [-1, 1] and must not trip the domain check.
_ENDPOINT_SLACK = 1e-12


@dataclass(frozen=True)
class JacobiParams:
    """Degree and weight exponents of P_n^{(alpha,beta)}."""

    n: int
    alpha: float
    beta: float

    def __post_init__(self):
        if self.n < 0 or self.n != int(self.n):
            raise DomainError(f"degree must be a nonnegative integer, got {self.n}")
        if not (self.alpha > -1 and self.beta > -1):
            raise DomainError(
                f"need alpha, beta > -1, got alpha={self.alpha}, beta={self.beta}"
            )


def _checked_argument(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise DomainError("jacobi argument must be finite")
    if np.any(np.abs(t) > 1.0 + _ENDPOINT_SLACK):
        raise DomainError("jacobi argument must lie in [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def jacobi_iter(alpha, beta, t, nmax):
    """Yield (k, P_k^{(alpha,beta)}(t)) for k = 0..nmax by upward recurrence.

    The yielded arrays are reused internally only after the next step is
    formed, so consumers may read but must not mutate them.  Upward
    recurrence in the degree is stable on [-1, 1] for alpha, beta > -1.
    """
    t = np.asarray(t, dtype=float)
    pkm1 = np.ones_like(t)
    yield 0, pkm1
    if nmax == 0:
        return
    pk = 0.5 * (alpha + beta + 2.0) * t + 0.5 * (alpha - beta)
    yield 1, pk
    ab = alpha + beta
    aa_bb = (alpha - beta) * (alpha + beta)
    for k in range(2, nmax + 1):
        c = 2.0 * k + ab
        a1 = 2.0 * k * (k + ab) * (c - 2.0)
        a2 = (c - 1.0) * aa_bb
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c
        pkm1, pk = pk, ((a2 + a3 * t) * pk - a4 * pkm1) / a1
        yield k, pk


def jacobi_eval(params: JacobiParams, t):
    """P_n^{(alpha,beta)}(t) for scalar or array t in [-1, 1]."""
    scalar = np.isscalar(t) or np.ndim(t) == 0
    tt = _checked_argument(t)
    value = None
    for _, pk in jacobi_iter(params.alpha, params.beta, tt, params.n):
        value = pk
    return float(value) if scalar else value


def _bessel_series(nu, r, max_terms=300):
    """Ascending series; accurate when r < 12 or the order exceeds r - 1."""
    out = np.zeros_like(r)
    pos = r > 0.0
    if np.any(~pos):
        out[~pos] = 1.0 if nu == 0.0 else 0.0
    if not np.any(pos):
        return out
    rp = r[pos]
    term = np.exp(nu * np.log(rp / 2.0) - math.lgamma(nu + 1.0))
    total = term.copy()
    quarter = rp * rp / 4.0
    for k in range(1, max_terms):
        term *= -quarter / (k * (nu + k))
        total += term
        if np.all(np.abs(term) <= 1e-17 * (1.0 + np.abs(total))) and k > np.max(rp) / 2.0:
            break
    out[pos] = total
    return out


def _bessel_hankel(mu, r, max_terms=40):
    """Large-argument expansion at order mu; needs r >= 12 and r > mu."""
    # Complex form: J_mu(r) = sqrt(2/(pi r)) Re[e^{i omega} sum_k i^k a_k / r^k],
    # omega = r - mu pi/2 - pi/4.  The series is divergent; each element is
    # frozen at its smallest term.
    term = np.ones(r.shape, dtype=complex)
    total = term.copy()
    active = np.ones(r.shape, dtype=bool)
    four_mu2 = 4.0 * mu * mu
    for k in range(1, max_terms):
        nxt = term * (1j * (four_mu2 - (2.0 * k - 1.0) ** 2) / (8.0 * k * r))
        growing = np.abs(nxt) >= np.abs(term)
        active &= ~growing
        tiny = np.abs(nxt) <= 1e-18 * np.abs(total)
        total = np.where(active, total + nxt, total)
        active &= ~tiny
        term = nxt
        if not np.any(active):
            break
    omega = r - mu * (np.pi / 2.0) - np.pi / 4.0
    return np.sqrt(2.0 / (np.pi * r)) * np.real(np.exp(1j * omega) * total)


def bessel_j(nu, r):
    """J_nu(r) for nu >= 0 and scalar or array r >= 0.

    Ascending series below the crossover, large-argument expansion above,
    with the expansion seeded at the fractional order and walked up by the
    three-term recurrence (stable upward while the order stays below r).
    The crossover keeps both branches inside their accurate regimes:
    the expansion is used only when r >= 12 and r >= nu + 1, so series
    cancellation never exceeds the 1e-10 budget.
    """
    if not np.isscalar(nu) or not math.isfinite(nu) or nu < 0:
        raise DomainError(f"order must be a finite scalar >= 0, got {nu}")
    scalar = np.isscalar(r) or np.ndim(r) == 0
    rr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(rr)) or np.any(rr < 0):
        raise DomainError("argument must be finite and >= 0")
    rr = np.atleast_1d(rr.astype(float))

    out = np.empty_like(rr)
    use_asym = (rr >= 12.0) & (rr >= nu + 1.0)
    if np.any(~use_asym):
        out[~use_asym] = _bessel_series(nu, rr[~use_asym])
    if np.any(use_asym):
        ra = rr[use_asym]
        m = int(math.floor(nu))
        mu = nu - m
        jlo = _bessel_hankel(mu, ra)
        if m == 0:
            out[use_asym] = jlo
        else:
            jhi = _bessel_hankel(mu + 1.0, ra)
            for j in range(1, m):
                jlo, jhi = jhi, (2.0 * (mu + j) / ra) * jhi - jlo
            out[use_asym] = jhi
    if scalar:
        return float(out[0])
    return out.reshape(np.shape(r))


def log_gamma_ratio(a, b):
    """ln Gamma(a) - ln Gamma(b) for a, b > 0, stable far past overflow."""
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"need positive finite arguments, got a={a}, b={b}")
    return math.lgamma(a) - math.lgamma(b)
