"""Oracle tests for the special-function layer.

The Jacobi oracle is the explicit binomial sum evaluated in 40-digit
arithmetic (immune to recurrence cancellation); the Bessel oracles are
closed half-integer forms and scipy's jv.  The package implementations
must reproduce them without ever importing them.
"""

import math

import mpmath as mp
import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from projlab.errors import DomainError
from projlab.specfun import JacobiParams, bessel_j, jacobi_eval, log_gamma_ratio


def jacobi_binomial_sum(n, alpha, beta, t):
    """Finite-sum definition of P_n^{(alpha,beta)}(t) at 40 digits."""
    with mp.workdps(40):
        half_minus = (mp.mpf(t) - 1) / 2
        half_plus = (mp.mpf(t) + 1) / 2
        total = mp.mpf(0)
        for s in range(n + 1):
            total += (
                mp.binomial(n + alpha, n - s)
                * mp.binomial(n + beta, s)
                * half_minus**s
                * half_plus ** (n - s)
            )
        return float(total)


def test_degree_zero_is_one():
    assert jacobi_eval(JacobiParams(0, 0.3, -0.2), 0.3) == 1.0


def test_odd_degree_reflection():
    p = JacobiParams(3, 0.0, 0.0)
    assert jacobi_eval(p, -0.5) == pytest.approx(-jacobi_eval(p, 0.5), abs=1e-14)


def test_small_degree_matches_binomial_sum():
    got = jacobi_eval(JacobiParams(5, 0.5, 0.5), 0.7)
    want = jacobi_binomial_sum(5, 0.5, 0.5, 0.7)
    assert got == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("alpha,beta", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (1.7, 0.3)])
@pytest.mark.parametrize("n", [2, 7, 16, 33, 64])
def test_recurrence_matches_binomial_sum(n, alpha, beta):
    for t in np.linspace(-1.0, 1.0, 9):
        want = jacobi_binomial_sum(n, alpha, beta, t)
        got = jacobi_eval(JacobiParams(n, alpha, beta), t)
        assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0])
@pytest.mark.parametrize("n", [128, 512, 2048])
def test_matches_scipy_at_large_degree(n, nu):
    t = np.linspace(-1.0, 1.0, 41)
    got = jacobi_eval(JacobiParams(n, nu, nu), t)
    want = scipy.special.eval_jacobi(n, nu, nu, t)
    scale = np.max(np.abs(want))
    assert np.max(np.abs(got - want)) <= 1e-10 * scale


def test_vectorized_jacobi_matches_scalar():
    p = JacobiParams(9, 0.5, 0.5)
    t = np.linspace(-0.9, 0.9, 7)
    vec = jacobi_eval(p, t)
    assert vec.shape == t.shape
    for ti, vi in zip(t, vec):
        assert jacobi_eval(p, ti) == pytest.approx(vi, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=0, max_value=256),
    nu=st.floats(min_value=-0.9, max_value=3.0),
    t=st.floats(min_value=1e-6, max_value=1.0),
)
def test_symmetric_weight_parity(n, nu, t):
    p = JacobiParams(n, nu, nu)
    left = jacobi_eval(p, -t)
    right = (-1.0) ** n * jacobi_eval(p, t)
    assert abs(left - right) <= 1e-12 * (1.0 + abs(right))


def test_jacobi_domain_errors():
    p = JacobiParams(3, 0.0, 0.0)
    with pytest.raises(DomainError):
        jacobi_eval(p, 1.5)
    with pytest.raises(DomainError):
        jacobi_eval(p, float("nan"))
    with pytest.raises(DomainError):
        JacobiParams(3, -1.0, 0.0)
    with pytest.raises(DomainError):
        JacobiParams(-1, 0.0, 0.0)


def test_bessel_at_zero():
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(0.5, 0.0) == 0.0
    assert bessel_j(3.0, 0.0) == 0.0


@pytest.mark.parametrize("r", [0.7, 2.0, 15.0, 100.0])
def test_half_integer_closed_forms(r):
    amp = math.sqrt(2.0 / (math.pi * r))
    assert bessel_j(0.5, r) == pytest.approx(amp * math.sin(r), abs=1e-10)
    assert bessel_j(1.5, r) == pytest.approx(
        amp * (math.sin(r) / r - math.cos(r)), abs=1e-10
    )
    assert bessel_j(2.5, r) == pytest.approx(
        amp * ((3.0 / r**2 - 1.0) * math.sin(r) - 3.0 * math.cos(r) / r), abs=1e-10
    )


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.0, 1.7, 2.0, 5.0, 10.3, 20.0])
def test_matches_scipy_reference_grid(nu):
    r = np.logspace(-2, 4, 25)
    got = bessel_j(nu, r)
    want = scipy.special.jv(nu, r)
    assert np.max(np.abs(got - want)) <= 1e-10


@pytest.mark.parametrize("nu", [0.0, 0.5])
@pytest.mark.parametrize("r", [50.0, 200.0, 1000.0])
def test_large_argument_cosine_form(nu, r):
    omega = r - nu * math.pi / 2.0 - math.pi / 4.0
    leading = math.sqrt(2.0 / (math.pi * r)) * math.cos(omega)
    assert abs(bessel_j(nu, r) - leading) <= 0.2 * r**-1.5


@settings(max_examples=60, deadline=None)
@given(
    nu=st.floats(min_value=1.0, max_value=20.0),
    r=st.floats(min_value=0.5, max_value=100.0),
)
def test_three_term_identity(nu, r):
    lhs = bessel_j(nu - 1.0, r) + bessel_j(nu + 1.0, r)
    rhs = (2.0 * nu / r) * bessel_j(nu, r)
    assert abs(lhs - rhs) <= 1e-9


def test_vectorized_bessel_matches_scalar():
    r = np.array([0.3, 5.0, 40.0, 2000.0])
    vec = bessel_j(1.7, r)
    assert vec.shape == r.shape
    for ri, vi in zip(r, vec):
        assert bessel_j(1.7, ri) == pytest.approx(vi, abs=1e-14)


def test_bessel_domain_errors():
    with pytest.raises(DomainError):
        bessel_j(1.0, -0.1)
    with pytest.raises(DomainError):
        bessel_j(-0.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j(1.0, float("inf"))


def test_log_gamma_ratio_values():
    assert log_gamma_ratio(1.0, 1.0) == 0.0
    assert log_gamma_ratio(0.5, 1.0) == pytest.approx(math.log(math.sqrt(math.pi)), rel=1e-12)
    rng = np.random.default_rng(7)
    for _ in range(20):
        a, b = rng.uniform(0.1, 50.0, size=2)
        with mp.workdps(40):
            want = float(mp.loggamma(a) - mp.loggamma(b))
        assert log_gamma_ratio(a, b) == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_log_gamma_ratio_drives_half_power_growth():
    # ln Gamma(n + 2) - ln Gamma(n + 1.5) ~ 0.5 ln n for large n.
    n = 100
    got = log_gamma_ratio(n + 2.0, n + 1.5)
    assert abs(got - 0.5 * math.log(n)) <= 0.05


def test_log_gamma_ratio_domain_errors():
    with pytest.raises(DomainError):
        log_gamma_ratio(0.0, 1.0)
    with pytest.raises(DomainError):
        log_gamma_ratio(1.0, -2.0)
