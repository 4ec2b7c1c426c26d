"""Blow-up map, extension operator, and the kernel-pairing limit.

Oracles: the radius and composition identities are algebraic; the
Jacobian is checked against a finite-difference Gram determinant; the
extension of a constant density is checked against the closed Bessel
form; the Gaussian frequency profile is checked against brute-force
quadrature of the transform; and the fitted limit constant is checked
against the independent prediction built from the calibrated kernel's
plane-wave asymptotics.
"""

import math

import numpy as np
import pytest

from projlab.errors import (
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)
from projlab.specfun import bessel_j
from projlab.stereo import (
    ExtensionSample,
    extension_apply,
    extension_pairing,
    gaussian_frequency_profile,
    gaussian_pair_specs,
    gaussian_profile,
    i_n_integral,
    limit_deviation_table,
    mu_inverse,
    mu_jacobian,
    mu_map,
    stereo_plane_image,
)
from projlab.zonal import kappa_default, mehler_heine_constant


def test_mu_map_origin_and_radius():
    for d in (2, 3):
        for n in (1, 7, 40):
            south = mu_map(n, np.zeros(d))
            assert np.allclose(south, [0.0] * d + [-n], atol=0)
            x = np.random.default_rng(5).normal(size=(100, d)) * 3.0
            xi = mu_map(n, x)
            assert np.abs(np.linalg.norm(xi, axis=1) - n).max() <= 1e-12 * n


def test_mu_map_stereographic_composition():
    rng = np.random.default_rng(6)
    for d in (2, 3):
        x = rng.normal(size=(60, d)) * 3.0
        for n in (1, 7, 40):
            plane = stereo_plane_image(n, mu_map(n, x))
            assert np.abs(plane[:, :d] - x).max() <= 1e-10
            assert np.abs(plane[:, -1] + n).max() == 0.0
            assert np.abs(mu_inverse(n, mu_map(n, x)) - x).max() <= 1e-10


def test_mu_map_validation():
    with pytest.raises(DomainError):
        mu_map(0, np.zeros(2))
    with pytest.raises(DomainError):
        mu_map(-3, np.zeros(2))
    with pytest.raises(DomainError):
        mu_map(4, np.array([np.nan, 0.0]))
    with pytest.raises(UsageError):
        mu_map(4, np.zeros((2, 2, 2)))
    with pytest.raises(DomainError):
        mu_inverse(5, np.array([0.0, 0.0, 5.0]))
    with pytest.raises(DomainError):
        stereo_plane_image(5, np.array([0.0, 0.0, 5.0]))


def test_jacobian_matches_finite_difference_gram():
    rng = np.random.default_rng(7)

    def fd_gram(n, x):
        d = x.size
        cols = []
        for k in range(d):
            e = np.zeros(d)
            e[k] = 1e-5 * (1.0 + abs(x[k]))
            cols.append((mu_map(n, x + e) - mu_map(n, x - e)) / (2.0 * e[k]))
        frame = np.stack(cols, axis=1)
        return math.sqrt(np.linalg.det(frame.T @ frame))

    for d in (2, 3):
        for _ in range(50):
            x = rng.normal(size=d) * 2.5
            n = int(rng.integers(2, 30))
            direct = mu_jacobian(n, x)
            assert abs(direct - fd_gram(n, x)) <= 1e-6 * direct


def test_jacobian_limit_and_origin():
    assert mu_jacobian(9, np.zeros(2)) == 1.0
    x = np.array([1.5, -0.7])
    vals = [mu_jacobian(n, x) for n in (10, 100, 1000, 10**6)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert abs(vals[-1] - 1.0) <= 1e-9


def test_extension_constant_density_closed_form():
    one = lambda eta: np.ones(eta.shape[0])
    assert abs(extension_apply(3, one, np.zeros(3)).value - 4 * math.pi) <= 1e-10
    assert abs(extension_apply(2, one, np.zeros(2)).value - 2 * math.pi) <= 1e-10
    rng = np.random.default_rng(8)
    for d in (2, 3):
        pts = rng.normal(size=(20, d)) * 4.0
        vals = np.array([s.value for s in extension_apply(d, one, pts)])
        r = np.linalg.norm(pts, axis=1)
        nu = (d - 2) / 2.0
        ref = (2 * math.pi) ** (d / 2.0) * r ** (-nu) * bessel_j(nu, r)
        assert np.abs(vals - ref).max() <= 1e-9
        assert np.abs(vals.imag).max() <= 1e-12


def test_extension_even_density_is_real():
    direction = np.array([0.8, -0.6])

    def even_density(eta):
        return 1.0 + (eta @ direction) ** 2

    pts = np.random.default_rng(9).normal(size=(15, 2)) * 3.0
    vals = np.array([s.value for s in extension_apply(2, even_density, pts)])
    assert np.abs(vals.imag).max() <= 1e-10 * np.abs(vals.real).max()


def test_extension_validation():
    one = lambda eta: np.ones(eta.shape[0])
    with pytest.raises(DomainError):
        extension_apply(1, one, np.zeros(1))
    with pytest.raises(UsageError):
        extension_apply(2, one, np.zeros(3))
    with pytest.raises(UsageError):
        extension_apply(2, lambda eta: np.ones(3), np.zeros(2))
    with pytest.raises(DomainError):
        ExtensionSample(np.zeros(2), complex("inf"))


def test_gaussian_frequency_profile_is_the_transform():
    width, center = 0.7, (0.4, -0.2)
    fhat = gaussian_frequency_profile(width, center)
    f = gaussian_profile(width, center)
    x, w = np.polynomial.legendre.leggauss(160)
    x, w = 12.0 * x, 12.0 * w
    nodes = np.stack(np.meshgrid(x, x, indexing="ij"), -1).reshape(-1, 2)
    weights = (w[:, None] * w[None, :]).ravel()
    for eta in ([1.0, 0.0], [0.3, -1.1], [0.0, 0.0]):
        eta = np.asarray(eta)
        brute = np.sum(weights * f(nodes) * np.exp(-1j * nodes @ eta))
        assert abs(fhat(eta[None, :])[0] - brute) <= 1e-10 * abs(brute)
    with pytest.raises(DomainError):
        gaussian_profile(0.0, (0.0, 0.0))
    with pytest.raises(DomainError):
        gaussian_frequency_profile(-1.0, (0.0, 0.0))


def test_pairing_zero_symmetry_and_reality():
    f = gaussian_profile(0.6, (1.0, 0.5))
    g = gaussian_profile(1.0, (0.0, 0.0))
    zero = lambda p: np.zeros(p.shape[0])
    assert i_n_integral(2, 24, zero, g) == 0.0
    assert i_n_integral(2, 24, f, zero) == 0.0
    a = i_n_integral(2, 24, f, g)
    b = i_n_integral(2, 24, g, f)
    assert abs(a - np.conj(b)) <= 1e-12 * abs(a)
    assert abs(a.imag) <= 1e-12 * abs(a)


def test_pairing_guards():
    f = gaussian_profile(1.0, (0.0, 0.0))
    with pytest.raises(UnsupportedFeatureError):
        i_n_integral(3, 16, f, f)
    with pytest.raises(ResolutionError):
        i_n_integral(2, 16, f, f, azimuth_count=32)
    with pytest.raises(ResolutionError):
        i_n_integral(2, 16, f, f, polar_resolution=16)
    with pytest.raises(DomainError):
        i_n_integral(2, 0, f, f)
    with pytest.raises(UsageError):
        i_n_integral(2, 16, lambda p: np.zeros(3), f)
    with pytest.raises(UnsupportedFeatureError):
        extension_pairing(3, (1.0, (0.0, 0.0, 0.0)), (1.0, (0.0, 0.0, 0.0)))


def test_pairing_quadrature_is_converged():
    f = gaussian_profile(0.6, (1.0, 0.5))
    g = gaussian_profile(1.0, (0.0, 0.0))
    base = i_n_integral(2, 48, f, g)
    # the kernel is band-limited in the azimuth offset, so the minimal
    # legal count already integrates it exactly
    assert abs(i_n_integral(2, 48, f, g, azimuth_count=98) - base) <= 1e-12 * abs(base)
    assert abs(i_n_integral(2, 48, f, g, polar_resolution=64) - base) <= 1e-10 * abs(base)


def test_limit_deviations_decrease_over_the_bank():
    c_fit, rows = limit_deviation_table(2, (32, 64, 128))
    assert len(gaussian_pair_specs()) == 9
    by_pair = {}
    for n, k, v in rows:
        by_pair.setdefault(k, {})[n] = v
    assert sorted(by_pair) == list(range(9))
    for k, devs in by_pair.items():
        assert devs[32] > devs[64] > devs[128], f"pair {k} not decreasing"
    predicted = kappa_default(2) * mehler_heine_constant(2) / (2 * math.pi)
    assert abs(c_fit - predicted) <= 2e-3 * abs(predicted)
    assert abs(c_fit.imag) <= 1e-12 * abs(c_fit)
    with pytest.raises(UsageError):
        limit_deviation_table(2, ())
