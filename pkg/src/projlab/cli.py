"""Command-line driver: experiment commands, config files, CSV output,
and gnuplot script emission.

Every command writes one CSV (RFC-4180-style, header row first) and a
short stdout summary.  Runs are deterministic: the same parameters and
seed produce byte-identical CSV files.  Exit codes: 0 success, 1 I/O
failure, 2 domain/usage errors or a failed verification, 3 configuration
errors, 4 resolution or conditioning errors.
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .acceptance import run_suite
from .carleman import tau_sweep
from .errors import (
    ConditioningError,
    ConfigurationError,
    DomainError,
    ResolutionError,
    UnsupportedFeatureError,
    UsageError,
)
from .exponents import (
    ExponentPoint,
    classify_region,
    piecewise_gamma,
    sharp_range_status,
)
from .normlab import (
    DEGREE_WINDOW,
    family_ratios,
    fit_exponent,
    scan_dual_zonal,
    scan_lower_bounds,
    scan_power_method,
)
from .oscphase import cs_condition_check, decay_table, sphere_phase, t_lambda_eps_decay
from .projection import (
    function_from_modes,
    grid_inner,
    project_sweep,
    random_bandlimited,
    random_harmonic,
)
from .sphere import GridFunction, build_grid, lp_norm
from .stereo import limit_deviation_table
from .witnesses import FAMILIES, beam_lp_norm
from .zonal import fw_envelope, frenzen_wong_main, mehler_heine
from .specfun import JacobiParams, jacobi_eval


def _parse_pt(text):
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ConfigurationError(f"expected a point 'x,y', got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigurationError(f"point coordinates must be numbers: {text!r}")


def _parse_int_list(text):
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"expected a comma-separated integer list, got {text!r}")


def _parse_float_list(text):
    try:
        return tuple(float(part) for part in str(text).split(","))
    except ValueError:
        raise ConfigurationError(f"expected a comma-separated number list, got {text!r}")


def _parse_sweep(text):
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigurationError(f"expected a sweep 'start:stop:count', got {text!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigurationError(f"sweep fields must be start:stop:count, got {text!r}")
    if count < 1:
        raise ConfigurationError(f"sweep count must be >= 1, got {count}")
    return start, stop, count


def _parse_int(text):
    try:
        return int(str(text))
    except ValueError:
        raise ConfigurationError(f"expected an integer, got {text!r}")


def _parse_float(text):
    try:
        return float(str(text))
    except ValueError:
        raise ConfigurationError(f"expected a number, got {text!r}")


def _parse_families(text):
    names = tuple(part.strip().upper() for part in str(text).split(","))
    for name in names:
        if name not in FAMILIES:
            raise ConfigurationError(f"unknown witness family: {name}")
    return names


@dataclass(frozen=True)
class _Param:
    name: str
    convert: object
    default: object = None
    required: bool = False
    choices: tuple = None
    help: str = ""


_COMMANDS = {
    "kernel": (
        "zonal kernel asymptotics: small-angle limit or scaled one-term remainder",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("mode", str, "mehler-heine", choices=("mehler-heine", "remainder"),
                   help="which kernel table to emit"),
            _Param("n_list", _parse_int_list, None,
                   help="degrees (default 128,256,512 or 32,...,512 by mode)"),
        ),
    ),
    "project": (
        "projector residuals: eigenspace selection, idempotence, self-adjointness",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("n_max", _parse_int, 6, help="largest degree checked"),
            _Param("resolution", _parse_int, 40, help="polar grid resolution"),
        ),
    ),
    "regions": (
        "exponent-plane map: region label, predicted exponent, sharpness status",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("grid", _parse_int, 60, help="lattice refinement; rows = grid(grid+1)/2"),
        ),
    ),
    "witness": (
        "witness families: ratio table, beam norm law, or norming-dual probe",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("mode", str, "ratios", choices=("ratios", "beam-law", "dual")),
            _Param("pt", _parse_pt, None, help="exponent point x,y (ratios/dual modes)"),
            _Param("p", _parse_float, 2.0, help="norm index (beam-law mode)"),
            _Param("n_list", _parse_int_list, None, help="degrees (default per-dimension window)"),
            _Param("families", _parse_families, FAMILIES, help="witness families to include"),
        ),
    ),
    "norm-scan": (
        "best lower-bound ratio per degree at one exponent point",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("pt", _parse_pt, required=True, help="exponent point x,y"),
            _Param("n_list", _parse_int_list, None, help="degrees (default per-dimension window)"),
        ),
    ),
    "exponent-fit": (
        "fit the norm growth exponent at one point (power method or witnesses)",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("pt", _parse_pt, required=True, help="exponent point x,y"),
            _Param("n_list", _parse_int_list, None, help="degrees (default per-dimension window)"),
            _Param("method", str, "power", choices=("power", "witness")),
            _Param("iters", _parse_int, 12, help="power method iterations"),
        ),
    ),
    "carleman": (
        "weighted-inequality constant sweep over the weight exponent",
        (
            _Param("d", _parse_int, 3, help="ambient dimension"),
            _Param("p", _parse_float, 6.0 / 5.0, help="source norm index"),
            _Param("q", _parse_float, 6.0, help="image norm index"),
            _Param("tau_sweep", _parse_sweep, required=True, help="weight sweep start:stop:count"),
            _Param("dist_floor", _parse_float, 0.25, help="minimum spectral distance"),
        ),
    ),
    "limit": (
        "plane-limit deviations of the projector pairings per degree",
        (
            _Param("d", _parse_int, 2, help="sphere dimension"),
            _Param("n_list", _parse_int_list, (32, 64, 128), help="degrees"),
            _Param("resolution", _parse_int, 96, help="cap polar resolution"),
        ),
    ),
    "oscdecay": (
        "oscillatory operator decay ratios, or the phase curvature report",
        (
            _Param("d", _parse_int, 2, help="ambient dimension"),
            _Param("eps", _parse_float, 1.0 / 16.0, help="chart parameter"),
            _Param("lambda_list", _parse_float_list, (32.0, 64.0, 128.0, 256.0),
                   help="frequencies"),
            _Param("pt", _parse_pt, (0.75, 0.25), help="exponent point x,y"),
            _Param("grid_step", _parse_float, None, help="image grid step (default 1/(4 lambda))"),
            _Param("report", str, "decay", choices=("decay", "curvature")),
        ),
    ),
    "verify": (
        "run the numbered acceptance checks and report pass/fail",
        (
            _Param("suite", str, "acceptance", choices=("acceptance",)),
            _Param("only", _parse_int, None, help="run a single criterion by number"),
        ),
    ),
}


@dataclass
class ExperimentConfig:
    """A fully resolved experiment invocation."""

    command: str
    params: dict
    out: str = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ConfigurationError(f"unknown command: {self.command}")
        registry = {p.name: p for p in _COMMANDS[self.command][1]}
        for key in self.params:
            if key not in registry:
                raise ConfigurationError(f"unknown parameter for {self.command}: {key}")
        for param in registry.values():
            value = self.params.get(param.name)
            if value is None:
                if param.required:
                    raise ConfigurationError(
                        f"{self.command} requires --{param.name.replace('_', '-')}"
                    )
                self.params[param.name] = param.default
            elif param.choices and value not in param.choices:
                raise ConfigurationError(
                    f"{param.name} must be one of {', '.join(param.choices)}, got {value}"
                )
        if self.out is None:
            self.out = f"{self.command}.csv"
        self.seed = int(self.seed)
        self.tolerances = {k: float(v) for k, v in self.tolerances.items()}


def load_config(path, command=None):
    """Parse a flat key=value file into an ExperimentConfig.

    Lines are UTF-8, `#` starts a comment, keys may use - or _ as the
    separator.  A `command` key in the file supplies the command unless
    the caller (the command-line position argument) already did; caller
    values always win over file values.
    """
    raw = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, 1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                key, sep, value = text.partition("=")
                if not sep:
                    raise ConfigurationError(
                        f"{path}:{lineno}: expected key=value, got {text!r}"
                    )
                key = key.strip().replace("-", "_")
                if key in raw:
                    raise ConfigurationError(f"{path}: duplicate key: {key}")
                raw[key] = value.strip()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    file_command = raw.pop("command", None)
    command = command or file_command
    if command is None:
        raise ConfigurationError(f"{path}: no command given and none on the command line")
    if command not in _COMMANDS:
        raise ConfigurationError(f"unknown command: {command}")
    out = raw.pop("out", None)
    seed = _parse_int(raw.pop("seed", 0))
    tolerances = {}
    for key in [k for k in raw if k.startswith("tol.")]:
        tolerances[key[4:]] = _parse_float(raw.pop(key))
    registry = {p.name: p for p in _COMMANDS[command][1]}
    params = {}
    for key, value in raw.items():
        if key not in registry:
            raise ConfigurationError(f"unknown config key: {key}")
        params[key] = registry[key].convert(value)
    return ExperimentConfig(command, params, out=out, seed=seed, tolerances=tolerances)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def _build_parser():
    parser = _Parser(prog="projlab", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for command, (summary, params) in _COMMANDS.items():
        sub = subs.add_parser(command, help=summary, description=summary)
        for param in params:
            flag = "--" + param.name.replace("_", "-")
            if param.choices:
                sub.add_argument(flag, dest=param.name, default=None,
                                 choices=param.choices, help=param.help)
            else:
                sub.add_argument(flag, dest=param.name, default=None,
                                 type=param.convert, help=param.help)
        sub.add_argument("--out", default=None, help=f"output CSV path (default {command}.csv)")
        sub.add_argument("--seed", default=None, type=_parse_int, help="random seed (default 0)")
        sub.add_argument("--tol", action="append", default=None, metavar="NAME=VALUE",
                         help="tolerance override, repeatable")
        sub.add_argument("--config", default=None, help="key=value config file")
        sub.add_argument("--plot", default=None, choices=("loglog", "region_map", "decay"),
                         help="also emit a gnuplot script next to the CSV")
    return parser


def parse_args(argv=None):
    """Command line (plus optional config file) to (ExperimentConfig, plot)."""
    args = _build_parser().parse_args(argv)
    registry = {p.name: p for p in _COMMANDS[args.command][1]}
    if args.config:
        base = load_config(args.config, command=args.command)
        params = dict(base.params)
        out, seed, tolerances = base.out, base.seed, dict(base.tolerances)
        if out == f"{args.command}.csv":
            out = None
    else:
        params, out, seed, tolerances = {}, None, 0, {}
    for name in registry:
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.out is not None:
        out = args.out
    if args.seed is not None:
        seed = args.seed
    for item in args.tol or ():
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"expected --tol NAME=VALUE, got {item!r}")
        tolerances[name.strip()] = _parse_float(value)
    config = ExperimentConfig(args.command, params, out=out, seed=seed,
                              tolerances=tolerances)
    return config, args.plot


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".12g")
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _default_degrees(d, n_list):
    if n_list is not None:
        return n_list
    if d not in DEGREE_WINDOW:
        raise ConfigurationError(f"no default degree window for d={d}; pass --n-list")
    return DEGREE_WINDOW[d]


def _run_kernel(cfg):
    d, mode = cfg.params["d"], cfg.params["mode"]
    if mode == "mehler-heine":
        ns = cfg.params["n_list"] or (128, 256, 512)
        r = np.linspace(0.5, 8.0, 301)
        rows = []
        for n in ns:
            lhs, rhs = mehler_heine(d, n, r)
            rows.append((n, float(np.max(np.abs(lhs - rhs)))))
        _write_csv(cfg.out, ("n", "sup_error"), rows)
    else:
        ns = cfg.params["n_list"] or (32, 64, 128, 256, 512)
        nu = (d - 2) / 2.0
        rows = []
        for n in ns:
            big_n = n + nu + 0.5
            theta = np.linspace(10.0 / big_n, math.pi / 2.0, 400)
            exact = jacobi_eval(JacobiParams(n, nu, nu), np.cos(theta))
            approx = frenzen_wong_main(d, n, theta)
            worst = float(np.max(np.abs(approx - exact) / fw_envelope(d, n, theta)))
            rows.append((n, big_n * worst))
        _write_csv(cfg.out, ("n", "scaled_error"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _run_project(cfg):
    d, top, res = cfg.params["d"], cfg.params["n_max"], cfg.params["resolution"]
    grid = build_grid(d, res)
    harmonics = [
        random_harmonic(d, m, grid, seed=cfg.seed + 100 + m)
        for m in range(top + 1)
    ]
    f = random_bandlimited(d, top, grid, seed=cfg.seed + 5)
    g = random_bandlimited(d, top, grid, seed=cfg.seed + 6)
    sweep = project_sweep(grid, top, harmonics + [f, g])
    rows = []
    for n in range(top + 1):
        for m, y in enumerate(harmonics):
            out = function_from_modes(grid, sweep[n, m])
            target = y.values if m == n else 0.0
            gap = lp_norm(GridFunction(grid, out.values - target), 2)
            rows.append(("selection", n, m, gap / lp_norm(y, 2)))
    once = [function_from_modes(grid, sweep[n, top + 1]) for n in range(top + 1)]
    resweep = project_sweep(grid, top, once)
    for n in range(top + 1):
        twice = function_from_modes(grid, resweep[n, n])
        base = lp_norm(once[n], 2) + 1e-30
        rows.append(
            ("idempotence", n, n,
             lp_norm(GridFunction(grid, twice.values - once[n].values), 2) / base)
        )
        left = grid_inner(once[n], g)
        right = grid_inner(f, function_from_modes(grid, sweep[n, top + 2]))
        rows.append(("adjoint", n, n, abs(left - right) / (abs(left) + abs(right) + 1e-30)))
    _write_csv(cfg.out, ("check", "n", "m", "value"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _run_regions(cfg):
    d, grid = cfg.params["d"], cfg.params["grid"]
    if grid < 1:
        raise ConfigurationError(f"grid must be >= 1, got {grid}")
    rows = []
    for i in range(1, grid + 1):
        for j in range(1, i + 1):
            pt = ExponentPoint(i / (grid + 1), j / (grid + 1))
            rows.append(
                (
                    pt.x,
                    pt.y,
                    classify_region(d, pt).value,
                    piecewise_gamma(d, pt),
                    sharp_range_status(d, pt).value,
                )
            )
    _write_csv(cfg.out, ("x", "y", "region", "gamma", "status"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _run_witness(cfg):
    d = cfg.params["d"]
    if cfg.params["mode"] == "beam-law":
        ns = cfg.params["n_list"] or (16, 32, 64, 128, 256)
        p = cfg.params["p"]
        rows = [(n, beam_lp_norm(d, n, p)) for n in ns]
        _write_csv(cfg.out, ("n", "norm"), rows)
        print(f"wrote {len(rows)} rows to {cfg.out}")
        if len(rows) >= 3:
            fit = fit_exponent(rows)
            print(f"fitted slope {fit.slope:.4f}, predicted {-(d - 1) / (2.0 * p):.4f}")
        return 0
    if cfg.params["pt"] is None:
        raise ConfigurationError(f"witness --mode {cfg.params['mode']} requires --pt")
    pt = ExponentPoint(*cfg.params["pt"])
    ns = _default_degrees(d, cfg.params["n_list"])
    if cfg.params["mode"] == "dual":
        rows = scan_dual_zonal(d, pt, ns)
        _write_csv(cfg.out, ("n", "ratio"), rows)
        print(f"wrote {len(rows)} rows to {cfg.out}")
        if len(rows) >= 3:
            fit = fit_exponent(rows)
            print(
                f"fitted slope {fit.slope:.4f}, predicted exponent "
                f"{piecewise_gamma(d, pt):.4f} plus any log factor"
            )
        return 0
    rows = []
    for n in ns:
        ratios = family_ratios(d, n, pt, cfg.params["families"])
        for family in cfg.params["families"]:
            rows.append((n, ratios[family], family))
    _write_csv(cfg.out, ("n", "ratio", "family"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _run_norm_scan(cfg):
    d = cfg.params["d"]
    pt = ExponentPoint(*cfg.params["pt"])
    ns = _default_degrees(d, cfg.params["n_list"])
    rows = scan_lower_bounds(d, pt, ns)
    _write_csv(cfg.out, ("n", "ratio", "family"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    if len(rows) >= 3:
        fit = fit_exponent([(n, r) for n, r, _ in rows])
        print(
            f"fitted slope {fit.slope:.4f}, predicted exponent "
            f"{piecewise_gamma(d, pt):.4f}, region {classify_region(d, pt).value}"
        )
    return 0


def _run_exponent_fit(cfg):
    d = cfg.params["d"]
    pt = ExponentPoint(*cfg.params["pt"])
    ns = _default_degrees(d, cfg.params["n_list"])
    if cfg.params["method"] == "power":
        rows = scan_power_method(d, pt, ns, iters=cfg.params["iters"], seed=cfg.seed)
    else:
        rows = [(n, r) for n, r, _ in scan_lower_bounds(d, pt, ns)]
    _write_csv(cfg.out, ("n", "ratio"), rows)
    fit = fit_exponent(rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    print(
        f"fitted slope {fit.slope:.4f} (r^2 {fit.r_squared:.4f}), predicted exponent "
        f"{piecewise_gamma(d, pt):.4f}, region {classify_region(d, pt).value}"
    )
    return 0


def _run_carleman(cfg):
    start, stop, count = cfg.params["tau_sweep"]
    taus = [start + (stop - start) * k / max(count - 1, 1) for k in range(count)]
    rows = tau_sweep(cfg.params["d"], cfg.params["p"], cfg.params["q"], taus,
                     dist_floor=cfg.params["dist_floor"], seed=cfg.seed or 7)
    _write_csv(cfg.out, ("tau", "ratio", "worst_mode"), rows)
    ratios = [r for _, r, _ in rows]
    print(f"wrote {len(rows)} rows to {cfg.out}")
    print(f"ratio spread {max(ratios) / min(ratios):.3f} over the sweep")
    return 0


def _run_limit(cfg):
    c_fit, raw = limit_deviation_table(
        cfg.params["d"], cfg.params["n_list"], cfg.params["resolution"]
    )
    per_degree = {}
    for n, _, deviation in raw:
        per_degree[n] = max(per_degree.get(n, 0.0), deviation)
    rows = sorted(per_degree.items())
    _write_csv(cfg.out, ("n", "deviation"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    print(f"fitted pairing constant {c_fit.real:.6f}")
    return 0


def _run_oscdecay(cfg):
    d = cfg.params["d"]
    if cfg.params["report"] == "curvature":
        rows = []
        for u in np.linspace(-0.9, 0.9, 10):
            report = cs_condition_check(sphere_phase(u), np.zeros(2), np.zeros(1))
            target = 1.0 / (1.0 - u * u)
            err = float(np.max(np.abs(report.hessian_eigs - target))) / target
            rows.append((u, err, report.rank_ok, report.elliptic))
        _write_csv(cfg.out, ("u", "eig_rel_err", "rank_ok", "elliptic"), rows)
        print(f"wrote {len(rows)} rows to {cfg.out}")
        return 0
    pt = ExponentPoint(*cfg.params["pt"])
    lams = cfg.params["lambda_list"]
    rows = decay_table(d, cfg.params["eps"], lams, pt, grid_step=cfg.params["grid_step"])
    _write_csv(cfg.out, ("lambda", "member", "ratio"), rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    if len(set(lam for lam, _, _ in rows)) >= 3:
        fit = t_lambda_eps_decay(d, cfg.params["eps"], lams, pt,
                                 grid_step=cfg.params["grid_step"])
        print(f"fitted decay slope {fit.slope:.4f} (r^2 {fit.r_squared:.4f})")
    return 0


def _run_verify(cfg):
    results = run_suite(only=cfg.params["only"], tolerances=cfg.tolerances)
    for result in results:
        print(result.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    _write_csv(cfg.out, ("criterion", "name", "passed", "detail"),
               [(r.index, r.name, r.passed, r.detail) for r in results])
    print(f"wrote {len(results)} rows to {cfg.out}")
    return 0 if not failed else 2


_RUNNERS = {
    "kernel": _run_kernel,
    "project": _run_project,
    "regions": _run_regions,
    "witness": _run_witness,
    "norm-scan": _run_norm_scan,
    "exponent-fit": _run_exponent_fit,
    "carleman": _run_carleman,
    "limit": _run_limit,
    "oscdecay": _run_oscdecay,
    "verify": _run_verify,
}

_PLOT_SCHEMAS = {
    "loglog": ("n", "lambda", "tau"),
    "region_map": ("x", "y", "region", "gamma"),
    "decay": ("lambda", "member", "ratio"),
}


def emit_plot_script(csv_path, kind):
    """Write a gnuplot script next to the CSV and return the script path.

    The script references only the CSV.  The CSV header must match the
    plot kind: loglog wants a numeric scan (first column n/lambda/tau),
    region_map wants x,y,region,gamma columns, decay wants
    lambda,member,ratio columns.
    """
    if kind not in _PLOT_SCHEMAS:
        raise ConfigurationError(f"unknown plot kind: {kind}")
    try:
        with open(csv_path, newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            body = list(reader)
    except OSError as exc:
        raise ConfigurationError(f"cannot read CSV {csv_path}: {exc}")
    if not header:
        raise ConfigurationError(f"{csv_path}: empty file, no header row")
    lines = ["# generated plot script; data stays in the CSV",
             "set datafile separator ','"]
    if kind == "loglog":
        if header[0] not in _PLOT_SCHEMAS["loglog"] or len(header) < 2:
            raise ConfigurationError(
                f"{csv_path}: loglog wants a scan CSV with a first column in "
                f"{_PLOT_SCHEMAS['loglog']}, got {header}"
            )
        lines += [
            "set logscale xy",
            f"set xlabel '{header[0]}'",
            f"set ylabel '{header[1]}'",
            f"plot '{csv_path}' every ::1 using 1:2 with linespoints title '{header[1]}'",
        ]
    elif kind == "region_map":
        if tuple(header[:4]) != _PLOT_SCHEMAS["region_map"]:
            raise ConfigurationError(
                f"{csv_path}: region_map wants columns x,y,region,gamma, got {header}"
            )
        lines += [
            "set size ratio -1",
            "set xlabel '1/p'",
            "set ylabel '1/q'",
            "set cblabel 'gamma'",
            f"plot '{csv_path}' every ::1 using 1:2:4 with points pointtype 5 "
            "pointsize 0.6 palette notitle",
        ]
    else:
        if tuple(header[:3]) != _PLOT_SCHEMAS["decay"]:
            raise ConfigurationError(
                f"{csv_path}: decay wants columns lambda,member,ratio, got {header}"
            )
        members = sorted({row[1] for row in body if row}, key=lambda m: (len(m), m))
        lines += ["set logscale xy", "set xlabel 'lambda'", "set ylabel 'ratio'"]
        clauses = [
            f"'{csv_path}' every ::1 using (column(2)=={m}?column(1):NaN):3 "
            f"with linespoints title 'member {m}'"
            for m in members
        ] or [f"'{csv_path}' every ::1 using 1:3 with linespoints notitle"]
        lines.append("plot " + ", \\\n     ".join(clauses))
    script_path = str(csv_path) + ".gnuplot"
    with open(script_path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    return script_path


def run(config):
    """Execute one experiment; returns the process exit status."""
    return _RUNNERS[config.command](config)


def main(argv=None):
    try:
        config, plot = parse_args(argv)
        status = run(config)
        if plot:
            print(f"wrote plot script {emit_plot_script(config.out, plot)}")
        return status
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except (ResolutionError, ConditioningError) as exc:
        print(f"resolution/conditioning error: {exc}", file=sys.stderr)
        return 4
    except (DomainError, UsageError, UnsupportedFeatureError, AssertionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
