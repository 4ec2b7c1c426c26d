"""Phase lemmas, curvature checks, and the oscillatory decay experiment.

Oracles: psi/phi limits are compared against their closed flat limits
with convergence constants tracked across eps halvings; the curvature
checker is verified on the sphere phase against the closed eigenvalue
1/(1-u^2) and on the frozen-distance phase against the closed Hessian
(v v^T - I)/rho^2; decay slopes are compared against the -d/q rate.
"""

import math

import numpy as np
import pytest

from projlab.errors import (
    ConditioningError,
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)
from projlab.exponents import ExponentPoint
from projlab.oscphase import (
    MAX_EPSILON,
    AnnulusWitness,
    PhaseProbe,
    cs_condition_check,
    decay_table,
    frozen_distance_phase,
    oscillatory_witness_bank,
    phi_eps,
    phi_probe_deviation,
    psi_deviation,
    psi_eps,
    random_probe,
    smooth_cutoff,
    sphere_phase,
    t_lambda_eps_decay,
)

PT = ExponentPoint(0.75, 0.25)


def test_psi_matches_its_formula_and_limit():
    for k in (4, 6, 8):
        eps = 2.0**-k
        direct = math.acos(1.0 - eps * eps * 3.0) / eps
        assert abs(psi_eps(eps, 3.0) - direct) <= 1e-14
        assert abs(psi_eps(eps, 1.0) - math.sqrt(2.0)) <= 2.0 * eps


def test_psi_validation():
    with pytest.raises(DomainError):
        psi_eps(0.0, 1.0)
    with pytest.raises(DomainError):
        psi_eps(1.5, 1.0)
    with pytest.raises(DomainError):
        psi_eps(0.1, 2.0**-9)
    with pytest.raises(DomainError):
        psi_eps(0.1, 2.0**9)
    with pytest.raises(UsageError):
        psi_deviation(0.01, order=3)
    with pytest.raises(UsageError):
        psi_deviation(0.01, samples=4)


def test_psi_convergence_constants_stable_under_halving():
    for order in (0, 1, 2):
        consts = [psi_deviation(2.0**-k, order) / 2.0**-k for k in (4, 5, 6, 7)]
        for before, after in zip(consts, consts[1:]):
            assert after <= 1.1 * before


def test_phi_matches_displayed_formula_and_symmetry():
    eps = MAX_EPSILON
    x = np.array([0.5, 0.2])
    y = np.array([1.0, -0.3])
    arg = eps * eps * (x @ y) + math.sqrt(
        (1.0 - eps * eps * (x @ x)) * (1.0 - eps * eps * (y @ y))
    )
    assert abs(phi_eps(eps, x, y) - math.acos(arg) / eps) <= 1e-13
    assert phi_eps(eps, x, y) == phi_eps(eps, y, x)


def test_phi_validation():
    eps = MAX_EPSILON
    with pytest.raises(DomainError):
        phi_eps(eps, np.zeros(2), np.array([0.05, 0.0]))
    with pytest.raises(DomainError):
        phi_eps(eps, np.zeros(2), np.array([10.0, 0.0]))
    with pytest.raises(DomainError):
        phi_eps(eps, np.array([17.0, 0.0]), np.array([9.5, 0.0]))
    with pytest.raises(UsageError):
        phi_eps(eps, np.zeros((2, 2)), np.zeros((3, 2)))


def test_phi_convergence_constants_stable_under_halving():
    value_consts = []
    grad_consts = []
    for k in (4, 5, 6):
        eps = 2.0**-k
        value_sup, grad_sup = phi_probe_deviation(random_probe(eps, seed=3))
        value_consts.append(value_sup / eps)
        grad_consts.append(grad_sup / eps)
    for seq in (value_consts, grad_consts):
        for before, after in zip(seq, seq[1:]):
            assert after <= 1.1 * before


def test_probe_validation():
    good = ((np.zeros(2), np.array([1.0, 0.0])),)
    PhaseProbe(MAX_EPSILON, good)
    with pytest.raises(DomainError):
        PhaseProbe(0.2, good)
    with pytest.raises(DomainError):
        PhaseProbe(0.0, good)
    with pytest.raises(UsageError):
        PhaseProbe(MAX_EPSILON, ())
    with pytest.raises(DomainError):
        PhaseProbe(MAX_EPSILON, ((np.zeros(2), np.array([0.01, 0.0])),))
    with pytest.raises(DomainError):
        PhaseProbe(MAX_EPSILON, ((np.array([16.5, 0.0]), np.array([12.0, 0.0])),))


def test_sphere_phase_curvature_at_ten_heights():
    for u in np.linspace(-0.9, 0.9, 10):
        report = cs_condition_check(sphere_phase(u), np.zeros(2), np.zeros(1))
        assert report.rank_ok and report.rank == 1
        assert report.elliptic
        target = 1.0 / (1.0 - u * u)
        assert np.abs(report.hessian_eigs - target).max() <= 1e-4 * target
        mixed_target = np.array([[-1.0 / math.sqrt(1.0 - u * u)], [0.0]])
        assert np.abs(report.mixed_hessian - mixed_target).max() <= 1e-6
        assert np.abs(report.null_direction - [0.0, 1.0]).max() <= 1e-6


def test_sphere_phase_curvature_higher_dimension():
    for u in (-0.7, 0.0, 0.6):
        report = cs_condition_check(sphere_phase(u), np.zeros(3), np.zeros(2))
        assert report.rank_ok and report.rank == 2
        assert report.elliptic
        target = 1.0 / (1.0 - u * u)
        assert np.abs(report.hessian_eigs - target).max() <= 1e-5 * target


def test_sphere_phase_validation():
    with pytest.raises(DomainError):
        sphere_phase(1.0)
    phase = sphere_phase(0.5)
    with pytest.raises(UsageError):
        phase(np.zeros(2), np.zeros(2))
    with pytest.raises(DomainError):
        phase(np.array([1.5, 0.0]), np.zeros(1))


def test_distance_phase_matches_closed_hessian():
    cases = (
        (np.array([0.3, 0.25]), np.array([0.1]), 0.0),
        (np.array([0.2, -0.1, 0.3]), np.array([0.0, 0.1]), 0.05),
    )
    for x0, z0, y_last in cases:
        report = cs_condition_check(frozen_distance_phase(y_last), x0, z0)
        assert report.rank_ok and report.elliptic
        chord = x0 - np.append(z0, y_last)
        rho = np.linalg.norm(chord)
        unit = chord / rho
        sign = np.sign(unit[np.argmax(np.abs(unit))])
        assert np.abs(report.null_direction - sign * unit).max() <= 1e-6
        head = (sign * unit)[:-1]
        closed = sign * (np.outer(head, head) - np.eye(z0.size)) / rho**2
        expected = np.sort(np.linalg.eigvalsh(closed))
        got = np.sort(report.hessian_eigs)
        assert np.abs(got - expected).max() <= 1e-4 * np.abs(expected).max()
        # all curvature eigenvalues share one sign here
        assert np.all(np.sign(got) == np.sign(got[0]))


def test_condition_check_validation():
    phase = sphere_phase(0.2)
    with pytest.raises(UsageError):
        cs_condition_check(phase, np.zeros(2), np.zeros(1), h=0.0)
    with pytest.raises(UsageError):
        cs_condition_check(phase, np.zeros(2), np.zeros(2))

    def noisy(x, z):
        return phase(x, z) + 1e-5 * math.cos(1e9 * (x[0] + 2.0 * x[1] + 7.0 * z[0]))

    with pytest.raises(ConditioningError):
        cs_condition_check(noisy, np.zeros(2), np.zeros(1))


def test_smooth_cutoff_shape():
    assert smooth_cutoff(np.array([-1.0, 0.0]))[0] == 0.0
    assert smooth_cutoff(np.array([1.0, 2.0]))[1] == 1.0
    grid = smooth_cutoff(np.linspace(-0.5, 1.5, 101))
    assert np.all(np.diff(grid) >= 0.0)
    assert abs(smooth_cutoff(np.array([0.5]))[0] - 0.5) <= 1e-12


def test_witness_validation():
    eps = MAX_EPSILON
    with pytest.raises(DomainError):
        AnnulusWitness(eps, 0.6, 0.5, 0.05)
    with pytest.raises(DomainError):
        AnnulusWitness(eps, 0.4, 0.55, 0.5)
    with pytest.raises(DomainError):
        AnnulusWitness(eps, 7.5, 7.95, 0.1)


def test_decay_argument_validation():
    with pytest.raises(UnsupportedFeatureError):
        t_lambda_eps_decay(3, MAX_EPSILON, (32, 64, 128), PT)
    with pytest.raises(DomainError):
        t_lambda_eps_decay(2, 0.2, (32, 64, 128), PT)
    with pytest.raises(DomainError):
        t_lambda_eps_decay(2, MAX_EPSILON, (0.5, 64), PT)
    with pytest.raises(DomainError):
        decay_table(2, MAX_EPSILON, (32,), ExponentPoint(0.0, 0.25))
    with pytest.raises(ResolutionError):
        decay_table(2, MAX_EPSILON, (32, 64), PT, grid_step=1.0 / 128.0)
    with pytest.raises(UsageError):
        decay_table(2, MAX_EPSILON, (32,), PT, f_bank=[])


def test_unit_lambda_ratio_is_bounded():
    rows = decay_table(2, MAX_EPSILON, (1.0,), PT)
    assert len(rows) == 2
    for _, _, ratio in rows:
        assert 0.0 < ratio < 100.0


_DECAY_LAMBDAS = (32.0, 64.0, 128.0, 256.0)
_decay_cache = {}


def _decay_fit(eps):
    if eps not in _decay_cache:
        rows = decay_table(2, eps, _DECAY_LAMBDAS, PT)
        fit = t_lambda_eps_decay(2, eps, _DECAY_LAMBDAS, PT)
        _decay_cache[eps] = (rows, fit)
    return _decay_cache[eps]


def test_radial_and_planar_image_norms_agree():
    # the bank is radial about the origin, so the image norm can be read
    # off a single spoke; an off-centre copy of the same annulus forces
    # the planar disk path, and the two must integrate the same function
    from projlab.oscphase import _image_norm

    eps = MAX_EPSILON
    lam = 32.0
    step = 1.0 / (4.0 * lam)
    witness = oscillatory_witness_bank(eps)[0]
    assert witness.is_radial
    spoke = _image_norm(eps, lam, witness, 4.0, step)
    shifted = AnnulusWitness(eps, 0.40, 0.55, 0.03, anchor=(1e-9, 0.0))
    assert not shifted.is_radial
    planar = _image_norm(eps, lam, shifted, 4.0, step)
    assert abs(spoke - planar) / planar <= 1e-3


def test_decay_slope_matches_the_q_rate():
    # |T f(x)| ~ min(1, (lam |x|)^{-1/2}) over the window, so the L^4
    # norm scales like lam^{-1/2} log^{1/4}(lam); over this lambda span
    # the log lifts the fitted slope to about -0.44
    _, fit = _decay_fit(MAX_EPSILON)
    assert -0.6 <= fit.slope <= -0.35
    assert fit.r_squared >= 0.99


def test_decay_doubling_ratios_per_member():
    rows, _ = _decay_fit(MAX_EPSILON)
    series = {}
    for lam, member, ratio in rows:
        series.setdefault(member, []).append((lam, ratio))
    assert len(series) == 2
    target = 2.0 ** (-0.5)
    for member, pairs in series.items():
        pairs.sort()
        for (_, lo), (_, hi) in zip(pairs, pairs[1:]):
            assert 0.75 * target <= hi / lo <= 1.25 * target


def test_decay_is_stable_under_eps_halving():
    _, fit_a = _decay_fit(MAX_EPSILON)
    _, fit_b = _decay_fit(MAX_EPSILON / 2.0)
    assert abs(fit_a.slope - fit_b.slope) <= 0.1 * abs(fit_a.slope)
    constant_ratio = math.exp(fit_a.intercept - fit_b.intercept)
    assert 0.9 <= constant_ratio <= 1.1
