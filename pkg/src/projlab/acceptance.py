"""Acceptance suite: the numbered end-to-end checks behind `projlab verify`.

Each check re-measures its quantity from scratch through the public module
APIs and compares against the documented tolerance.  The functions return
(passed, detail) so the CLI and the test suite can share one registry; the
tolerances live in PASS_BANDS and can be overridden per run, with the
defaults being the ones the package is accepted against.
"""

import math
from dataclasses import dataclass

import numpy as np

from .carleman import (
    apply_L,
    inverse_L,
    inverse_mode_norm,
    inverse_route_gap,
    make_config,
    profile_bank,
    tau_sweep,
)
from .errors import ConfigurationError
from .exponents import ExponentPoint, classify_region, critical_points, piecewise_gamma
from .normlab import (
    family_slopes,
    fit_exponent,
    scan_dual_zonal,
    scan_power_method,
)
from .oscphase import cs_condition_check, sphere_phase, t_lambda_eps_decay
from .projection import (
    function_from_modes,
    grid_inner,
    project_sweep,
    random_bandlimited,
    random_harmonic,
)
from .specfun import JacobiParams, jacobi_eval
from .sphere import GridFunction, build_grid, lp_norm
from .stereo import limit_deviation_table, mu_jacobian, mu_map
from .witnesses import SzegoRegime, beam_lp_norm, szego_integral
from .zonal import fw_envelope, frenzen_wong_main, mehler_heine

PASS_BANDS = {
    1: {"residual": 1e-8, "resolution": 40, "max_degree": 16},
    2: {"slope_margin": 0.05},
    3: {"slope_margin": 0.1},
    4: {"lower_margin": 0.1, "upper_margin": 0.15},
    5: {"slope_low": 0.0, "slope_high": 1.5, "fit_quality": 0.8},
    6: {"halving_ratio": 1.5},
    7: {"spread": 2.0},
    8: {"round_trip": 1e-6, "route_gap": 1e-8},
    9: {"uniformity": 10.0, "slope_margin": 0.1},
    10: {"jacobian": 1e-6},
    11: {"eig_rel": 1e-3},
    12: {"slope_low": -0.6, "slope_high": -0.35, "stability": 0.1},
}


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.index:2d} [{self.name}]: {status} ({self.detail})"


def _band(index, overrides):
    merged = dict(PASS_BANDS[index])
    if overrides:
        merged.update(overrides)
    return merged


def check_projector_exactness(tol=None):
    """Eigenspace selection, idempotence, and self-adjointness at low degree.

    One sweep pass projects every harmonic (plus two bandlimited probes)
    through every degree at once; per-pair applies would spend minutes on
    the d = 3 grid re-running the same kernel recurrence."""
    t = _band(1, tol)
    res = int(t["resolution"])
    top = int(t["max_degree"])
    idem_degrees = (2, min(8, top))
    worst_delta = worst_idem = worst_adj = 0.0
    for d in (2, 3):
        grid = build_grid(d, res)
        harmonics = [
            random_harmonic(d, m, grid, seed=100 + 10 * d + m)
            for m in range(top + 1)
        ]
        f = random_bandlimited(d, min(10, top), grid, seed=5 + d)
        g = random_bandlimited(d, min(10, top), grid, seed=6 + d)
        sweep = project_sweep(grid, top, harmonics + [f, g])
        for n in range(top + 1):
            for m, y in enumerate(harmonics):
                out = function_from_modes(grid, sweep[n, m])
                target = y.values if m == n else 0.0
                gap = lp_norm(GridFunction(grid, out.values - target), 2)
                worst_delta = max(worst_delta, gap / lp_norm(y, 2))
        once = {n: function_from_modes(grid, sweep[n, top + 1]) for n in idem_degrees}
        resweep = project_sweep(grid, max(idem_degrees), [once[n] for n in idem_degrees])
        for i, n in enumerate(idem_degrees):
            twice = function_from_modes(grid, resweep[n, i])
            base = lp_norm(once[n], 2)
            if base > 0.0:
                worst_idem = max(
                    worst_idem,
                    lp_norm(GridFunction(grid, twice.values - once[n].values), 2) / base,
                )
            left = grid_inner(once[n], g)
            right = grid_inner(f, function_from_modes(grid, sweep[n, top + 2]))
            scale = abs(left) + abs(right) + 1e-30
            worst_adj = max(worst_adj, abs(left - right) / scale)
    passed = max(worst_delta, worst_idem, worst_adj) <= t["residual"]
    detail = (
        f"selection {worst_delta:.2e}, idempotence {worst_idem:.2e}, "
        f"adjoint {worst_adj:.2e}, bound {t['residual']:.0e}"
    )
    return passed, detail


def check_beam_norm_law(tol=None):
    """Fitted beam-norm slope against -(d-1)/(2p) for p in {1, 2, 4}.

    Every degree in the window enters the fit: the p = 1 norms carry an
    exact 1/n tilt (the Beta law has no asymptotic-only regime at these
    degrees), and sparse doubling subsets leave the d = 3 fit outside
    the margin while the full window keeps it inside."""
    t = _band(2, tol)
    windows = {2: range(16, 257), 3: range(16, 97)}
    worst = 0.0
    for d, ns in windows.items():
        for p in (1.0, 2.0, 4.0):
            fit = fit_exponent([(n, beam_lp_norm(d, n, p)) for n in ns])
            worst = max(worst, abs(fit.slope + (d - 1) / (2.0 * p)))
    passed = worst <= t["slope_margin"]
    return passed, f"worst slope gap {worst:.4f}, margin {t['slope_margin']}"


_REGION_POINTS = {
    "T1": ExponentPoint(0.55, 0.45),
    "T2": ExponentPoint(0.9, 0.1),
    "T3": ExponentPoint(0.2, 0.05),
    "T3'": ExponentPoint(0.95, 0.8),
}


def check_lower_bound_slopes(tol=None):
    """Best-witness growth reaches the predicted exponent in every region.

    Families are ranked by their own fitted growth, not by pointwise
    ratios: each family carries a different n-independent constant, so
    the per-degree argmax can sit on a slow-growth family through any
    affordable degree window.  At the T3 sample the plain zonal profile
    outscores the oscillation-band indicator at every n <= 256 while
    growing a full tenth slower."""
    t = _band(3, tol)
    margins = {}
    labels_ok = True
    for label, pt in _REGION_POINTS.items():
        labels_ok = labels_ok and classify_region(2, pt).value == label
        slopes = family_slopes(2, pt)
        best = max(fit.slope for fit in slopes.values())
        margins[label] = best - piecewise_gamma(2, pt)
    worst = min(margins, key=margins.get)
    passed = labels_ok and margins[worst] >= -t["slope_margin"]
    detail = (
        f"min slope margin {margins[worst]:+.4f} at {worst} vs -{t['slope_margin']}"
    )
    if not labels_ok:
        detail += ", region sample points mislabeled"
    return passed, detail


_SHARP_POINTS = (
    ExponentPoint(0.5, 0.5),
    ExponentPoint(0.6, 0.4),
    ExponentPoint(0.9, 0.1),
)


def check_upper_envelope_slopes(tol=None):
    """Power-method growth stays inside the predicted exponent envelope."""
    t = _band(4, tol)
    gaps = []
    for pt in _SHARP_POINTS:
        fit = fit_exponent(scan_power_method(2, pt))
        gaps.append(fit.slope - piecewise_gamma(2, pt))
    passed = min(gaps) >= -t["lower_margin"] and max(gaps) <= t["upper_margin"]
    return passed, (
        f"slope - exponent in [{min(gaps):+.4f}, {max(gaps):+.4f}], "
        f"band [-{t['lower_margin']}, +{t['upper_margin']}]"
    )


def check_segment_log_growth(tol=None):
    """At the segment endpoint the normalized ratio grows, but slower than
    any power: a log-log-degree fit keeps a small positive slope.

    S is the triple point where three exponent branches tie, so every
    fixed witness family measures a clean n^gamma there and its
    normalized ratio goes flat.  The probe that sees the log is the
    norming dual of the zonal profile: at S the dual index p' lands
    exactly on the critical integrability line (verified below through
    the endpoint-integral regime classifier) and the measured ratio
    picks up the ||Z||_{p'} log factor."""
    t = _band(5, tol)
    s = critical_points(2)["S"]
    gamma = piecewise_gamma(2, s)
    p_dual = 1.0 / (1.0 - s.x)
    _, regime = szego_integral(64, 0.0, 0.0, 0.0, p_dual)
    rows = scan_dual_zonal(2, s)
    normalized = [(n, r / float(n) ** gamma) for n, r in rows]
    increasing = all(b > a for (_, a), (_, b) in zip(normalized, normalized[1:]))
    x = np.log(np.log([float(n) for n, _ in normalized]))
    y = np.log([v for _, v in normalized])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    quality = 1.0 - float(np.sum(resid**2)) / max(float(np.sum((y - y.mean()) ** 2)), 1e-30)
    passed = (
        regime is SzegoRegime.LOG
        and increasing
        and t["slope_low"] < slope <= t["slope_high"]
        and quality >= t["fit_quality"]
    )
    return passed, (
        f"dual-index regime {regime.value}, normalized ratios "
        f"increasing={increasing}, loglog slope {slope:.3f} in "
        f"({t['slope_low']}, {t['slope_high']}], fit quality {quality:.3f}"
    )


def check_small_angle_convergence(tol=None):
    """Small-angle kernel limit: sup error contracts when the degree doubles."""
    t = _band(6, tol)
    r = np.linspace(0.5, 8.0, 301)
    worst = math.inf
    for d in (2, 3):
        sups = []
        for n in (128, 256, 512):
            lhs, rhs = mehler_heine(d, n, r)
            sups.append(float(np.max(np.abs(lhs - rhs))))
        for a, b in zip(sups, sups[1:]):
            worst = min(worst, a / b)
    passed = worst >= t["halving_ratio"]
    return passed, f"min contraction ratio {worst:.2f} vs {t['halving_ratio']}"


def check_one_term_remainder_scaling(tol=None):
    """Degree-scaled one-term remainder stays within a bounded band."""
    t = _band(7, tol)
    worst = 0.0
    for d in (2, 3):
        nu = (d - 2) / 2.0
        scaled = []
        for n in (32, 64, 128, 256, 512):
            big_n = n + nu + 0.5
            theta = np.linspace(10.0 / big_n, math.pi / 2.0, 400)
            exact = jacobi_eval(JacobiParams(n, nu, nu), np.cos(theta))
            approx = frenzen_wong_main(d, n, theta)
            ratio = np.abs(approx - exact) / fw_envelope(d, n, theta)
            scaled.append(max(big_n * float(np.max(ratio)), 1e-8))
        worst = max(worst, max(scaled) / min(scaled))
    passed = worst <= t["spread"]
    return passed, f"max scaled-remainder spread {worst:.2f} vs {t['spread']}"


def check_weighted_round_trip(tol=None):
    """Inverse composed with the operator returns the bank to tolerance,
    and the two inverse routes agree."""
    t = _band(8, tol)
    cfg = make_config(3, 4.0, 6 / 5, 6.0)
    bank = profile_bank(cfg, build_grid(3, 12))
    worst_rt = worst_gap = 0.0
    for u in bank:
        back = inverse_L(cfg, apply_L(cfg, u))
        forth = apply_L(cfg, inverse_L(cfg, u))
        for mode, b, f in zip(u.modes, back.modes, forth.modes):
            scale = np.linalg.norm(mode.radial)
            worst_rt = max(
                worst_rt,
                np.linalg.norm(b.radial - mode.radial) / scale,
                np.linalg.norm(f.radial - mode.radial) / scale,
            )
        worst_gap = max(worst_gap, inverse_route_gap(cfg, u))
    passed = worst_rt <= t["round_trip"] and worst_gap <= t["route_gap"]
    return passed, (
        f"round trip {worst_rt:.2e} vs {t['round_trip']:.0e}, "
        f"route gap {worst_gap:.2e} vs {t['route_gap']:.0e} on {len(bank)} profiles"
    )


def check_weighted_uniformity(tol=None):
    """Measured constants stay uniform over the weight sweep, and the
    inverse blows up like 1/distance as resonance is approached."""
    t = _band(9, tol)
    taus = [0.5 + m + f for m in (2, 3, 4, 5)
            for f in (0.25, 0.3125, 0.375, 0.4375, 0.5)]
    rows = tau_sweep(3, 6 / 5, 6.0, taus)
    ratios = [r for _, r, _ in rows]
    spread = max(ratios) / min(ratios)
    dists = [0.25, 0.125, 0.0625, 0.03125, 0.015625]
    pairs = [(1.0 / s, inverse_mode_norm(3, 3, s, 6 / 5, 6.0, t_step=1e-3))
             for s in dists]
    fit = fit_exponent(pairs)
    passed = spread <= t["uniformity"] and abs(fit.slope - 1.0) <= t["slope_margin"]
    return passed, (
        f"sweep spread {spread:.2f} vs {t['uniformity']}, conditioning slope "
        f"{-fit.slope:.3f} vs -1 +- {t['slope_margin']}"
    )


def check_plane_limit(tol=None):
    """Pairings against the blown-up plane converge for every bank pair, and
    the map's area factor matches finite differences."""
    t = _band(10, tol)
    _, rows = limit_deviation_table(2, (32, 64, 128))
    per_pair = {}
    for n, pair, dev in rows:
        per_pair.setdefault(pair, []).append((n, dev))
    decreasing = all(
        all(b < a for (_, a), (_, b) in zip(sorted(seq), sorted(seq)[1:]))
        for seq in per_pair.values()
    )
    rng = np.random.default_rng(7)
    worst_jac = 0.0
    for d in (2, 3):
        for _ in range(50):
            x = rng.normal(size=d) * 2.5
            n = int(rng.integers(2, 30))
            cols = []
            for k in range(d):
                e = np.zeros(d)
                e[k] = 1e-5 * (1.0 + abs(x[k]))
                cols.append((mu_map(n, x + e) - mu_map(n, x - e)) / (2.0 * e[k]))
            frame = np.stack(cols, axis=1)
            fd = math.sqrt(np.linalg.det(frame.T @ frame))
            direct = mu_jacobian(n, x)
            worst_jac = max(worst_jac, abs(direct - fd) / direct)
    passed = decreasing and worst_jac <= t["jacobian"]
    return passed, (
        f"all {len(per_pair)} pair deviations decreasing={decreasing}, "
        f"area-factor gap {worst_jac:.2e} vs {t['jacobian']:.0e}"
    )


def check_curvature_conditions(tol=None):
    """Rank, ellipticity, and the closed curvature eigenvalue across heights."""
    t = _band(11, tol)
    worst = 0.0
    flags_ok = True
    for u in np.linspace(-0.9, 0.9, 10):
        report = cs_condition_check(sphere_phase(u), np.zeros(2), np.zeros(1))
        flags_ok = flags_ok and report.rank_ok and report.elliptic
        target = 1.0 / (1.0 - u * u)
        worst = max(worst, float(np.max(np.abs(report.hessian_eigs - target))) / target)
    passed = flags_ok and worst <= t["eig_rel"]
    return passed, (
        f"flags all set={flags_ok}, worst eigenvalue error {worst:.2e} "
        f"vs {t['eig_rel']:.0e} at 10 heights"
    )


def check_oscillatory_decay(tol=None):
    """Fitted image-norm decay sits in the admissible-rate band and is
    stable under halving the chart parameter."""
    t = _band(12, tol)
    pt = ExponentPoint(0.75, 0.25)
    lams = (32.0, 64.0, 128.0, 256.0)
    fit_a = t_lambda_eps_decay(2, 1.0 / 16.0, lams, pt)
    fit_b = t_lambda_eps_decay(2, 1.0 / 32.0, lams, pt)
    in_band = t["slope_low"] <= fit_a.slope <= t["slope_high"]
    stable = abs(fit_a.slope - fit_b.slope) <= t["stability"] * abs(fit_a.slope)
    passed = in_band and stable
    return passed, (
        f"slope {fit_a.slope:.4f} in [{t['slope_low']}, {t['slope_high']}], "
        f"halved-parameter shift {abs(fit_a.slope - fit_b.slope):.2e}"
    )


CRITERIA = (
    (1, "projector exactness", check_projector_exactness),
    (2, "beam norm law", check_beam_norm_law),
    (3, "lower-bound exponents", check_lower_bound_slopes),
    (4, "sharp-range envelope", check_upper_envelope_slopes),
    (5, "segment log growth", check_segment_log_growth),
    (6, "small-angle convergence", check_small_angle_convergence),
    (7, "one-term remainder", check_one_term_remainder_scaling),
    (8, "weighted round trip", check_weighted_round_trip),
    (9, "weighted uniformity", check_weighted_uniformity),
    (10, "plane limit", check_plane_limit),
    (11, "curvature conditions", check_curvature_conditions),
    (12, "oscillatory decay", check_oscillatory_decay),
)


def _split_overrides(tolerances):
    per = {}
    for key, value in (tolerances or {}).items():
        head, _, name = key.partition(".")
        try:
            index = int(head)
        except ValueError:
            raise ConfigurationError(f"tolerance key must look like '<criterion>.<name>': {key}")
        if index not in PASS_BANDS or name not in PASS_BANDS[index]:
            raise ConfigurationError(f"unknown tolerance key: {key}")
        per.setdefault(index, {})[name] = float(value)
    return per


def run_suite(only=None, tolerances=None):
    """Run the numbered checks (all, or a single index) and collect results."""
    per = _split_overrides(tolerances)
    if only is not None and only not in PASS_BANDS:
        raise ConfigurationError(f"no criterion numbered {only}")
    results = []
    for index, name, fn in CRITERIA:
        if only is not None and index != only:
            continue
        passed, detail = fn(per.get(index))
        results.append(CriterionResult(index, name, passed, detail))
    return results
