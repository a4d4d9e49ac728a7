"""Command-line entry point.

Every subcommand writes a JSON report (``--output``, default
``report.json``) and exits with 0 when all checks pass, 1 when a check
fails and 2 for invalid configuration.  Options can also come from a
``key = value`` file given with ``--config``; command-line flags win.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import suites
from .fem import manufactured as mf

SCHEMA_VERSION = 1

# (dest, type, default, (lo, hi) inclusive or None, help)
_COMMON = [
    ("seed", int, 0, (0, 2**32 - 1), "random seed"),
]

_OPTIONS = {
    "verify-abstract": [
        ("count", int, 100, (1, 100000), "number of random instances per case"),
        ("approx", int, 10, (1, 1000), "random approximations per instance"),
        ("max_dim", int, 40, (1, 400), "largest dimension of A"),
        ("case2_count", int, 1000, (1, 100000), "number of Case II instances"),
        ("tol", float, 1e-10, (0.0, 1.0), "relative tolerance of the identity checks"),
    ],
    "verify-fem": [
        ("problem", str, "all", None, "catalog entry or 'all'"),
        ("n", int, 16, (1, 512), "mesh cells per side"),
        ("omega", float, None, None, "frequency for Case II (nonzero)"),
        ("quad_degree", int, None, (1, 30), "quadrature degree (default: exact or 10)"),
        ("approximation", str, "interpolant", None, "interpolant or galerkin"),
    ],
    "adapt": [
        ("problem", str, "rd-layer", None, "catalog entry"),
        ("n0", int, 8, (1, 256), "initial mesh cells per side"),
        ("theta", float, 0.5, (0.0, 1.0), "Doerfler parameter in (0, 1]"),
        ("max_iter", int, 10, (1, 200), "maximal number of iterations"),
        ("target", float, None, (0.0, math.inf), "stop once eta is at most this value"),
        ("quad_degree", int, 10, (1, 30), "quadrature degree"),
        ("omega", float, None, None, "frequency for Case II (nonzero)"),
        ("tol", float, 1e-5, (0.0, 1.0), "tolerance of the Case I efficiency index"),
    ],
    "heat": [
        ("steps", int, 20, (1, 100000), "number of time steps"),
        ("n", int, 12, (1, 400), "primal dimension"),
        ("m", int, 8, (1, 400), "dual dimension"),
        ("dt", float, 0.05, (0.0, math.inf), "mean time step"),
        ("tol", float, 1e-10, (0.0, 1.0), "per-step tolerance"),
    ],
    "eddy": [
        ("count", int, 200, (1, 100000), "number of random instances"),
        ("max_dim", int, 20, (1, 400), "largest dimension"),
        ("omega", float, None, None, "fixed frequency (default: random sign and size)"),
        ("fem", str, "em-poly", None, "catalog entry for the finite element check, or 'none'"),
        ("n", int, 12, (1, 512), "mesh cells per side"),
    ],
    "robin": [
        ("n", int, 8, (2, 512), "mesh cells per side (even)"),
        ("gamma", str, "1,5,1@0.5:10", None, "comma separated list of Robin coefficients"),
        ("quad_degree", int, 10, (1, 30), "quadrature degree"),
        ("tol", float, 1e-6, (0.0, 1.0), "identity tolerance"),
    ],
}


class ConfigError(ValueError):
    pass


def _build_parser():
    parser = argparse.ArgumentParser(prog="majorant", description="Verify functional error identities and bounds.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in _OPTIONS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key = value file; flags given here take precedence")
        sp.add_argument("--output", default="report.json", help="JSON report path")
        sp.add_argument("--csv", default=None, help="optional CSV table path")
        for dest, typ, default, _, hlp in _COMMON + opts:
            sp.add_argument("--" + dest.replace("_", "-"), dest=dest, type=typ, default=default, help=hlp)
    return parser


def _read_config(path, command):
    """``key = value`` lines, ``#`` comments; keys may use ``-`` or ``_``."""
    known = {d for d, *_ in _COMMON + _OPTIONS[command]} | {"output", "csv"}
    tokens = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        dest = key.replace("-", "_")
        if dest not in known:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} for {command}")
        tokens += ["--" + dest.replace("_", "-"), value]
    return tokens


def _validate(args):
    for dest, typ, _, rng, _ in _COMMON + _OPTIONS[args.command]:
        v = getattr(args, dest)
        if v is None or rng is None:
            continue
        lo, hi = rng
        if typ is float and not math.isfinite(v) and not (v == math.inf and hi == math.inf):
            raise ConfigError(f"--{dest.replace('_', '-')} must be finite")
        open_low = dest in ("theta", "dt", "tol", "target")
        if v < lo or v > hi or (open_low and v <= lo):
            bound = f"({lo}, {hi}]" if open_low else f"[{lo}, {hi}]"
            raise ConfigError(f"--{dest.replace('_', '-')} = {v} outside {bound}")
    if getattr(args, "omega", None) is not None and (args.omega == 0 or not math.isfinite(args.omega)):
        raise ConfigError("--omega must be a nonzero finite number")
    if args.command == "verify-fem":
        if args.problem != "all" and args.problem not in mf.CATALOG:
            raise ConfigError(f"unknown problem {args.problem!r}; choose from all, {', '.join(mf.CATALOG)}")
        if args.approximation not in ("interpolant", "galerkin"):
            raise ConfigError("--approximation must be 'interpolant' or 'galerkin'")
    if args.command == "adapt" and args.problem not in mf.CATALOG:
        raise ConfigError(f"unknown problem {args.problem!r}")
    if args.command == "eddy" and args.fem != "none" and args.fem not in mf.CATALOG:
        raise ConfigError(f"unknown problem {args.fem!r}")
    if args.command == "robin":
        if args.n % 2:
            raise ConfigError("--n must be even")
        from .robin import PiecewiseGamma

        for g in args.gamma.split(","):
            try:
                PiecewiseGamma.parse(g)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None


def parse(argv):
    """Parse ``argv`` (without the program name) into a validated namespace."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.config:
        tokens = _read_config(args.config, args.command)
        # config values first so that explicit flags override them
        args = parser.parse_args([args.command] + tokens + list(argv[1:]))
    _validate(args)
    return args


def _config_dict(args):
    keys = [d for d, *_ in _COMMON + _OPTIONS[args.command]]
    return {k: getattr(args, k) for k in keys}


def _cmd_verify_abstract(args):
    results = [
        suites.abstract_case1(args.seed, args.count, args.approx, args.max_dim, args.tol),
        suites.abstract_minimization(args.seed + 1, max(1, args.count // 2), args.max_dim),
        suites.abstract_case2(args.seed + 2, args.case2_count, 3, args.max_dim, args.tol),
        suites.abstract_structure(args.seed + 3, args.count, args.max_dim),
    ]
    _, exact, sol2, f2 = suites.scalar_extremal_instance()
    scalar = suites.SuiteResult("scalar-extremal-instance", {"solution_norm_sq": sol2, "f_norm_sq": f2}, checks=1)
    if abs(sol2 - 2 * f2) > 1e-12 * f2:
        scalar.failures.append({"name": "scalar-extremal", "solution_norm_sq": sol2})
    results.append(scalar)
    rows = [[r.name, r.checks, r.passed] for r in results]
    return results, (["suite", "checks", "passed"], rows)


def _cmd_verify_fem(args):
    names = mf.CATALOG if args.problem == "all" else (args.problem,)
    res = suites.SuiteResult("fem")
    rows = []
    for name in names:
        rep = suites.fem_check(name, args.n, args.omega, args.quad_degree, args.approximation)
        res.record(rep)
        rows.append([name, rep.values["majorant"], rep.values["error_sq"], rep.values["efficiency"], rep.passed])
    pairing, rotation = suites.em_structure(min(args.n, 16), args.seed)
    res.record(pairing)
    res.record(rotation)
    res.values.update(pairing_defect=pairing.values["random_defect"], rotation_defect=rotation.values["defect"])
    return [res], (["problem", "majorant", "error_sq", "efficiency", "passed"], rows)


def _cmd_adapt(args):
    from .estimator import adaptive_loop
    from .fem import rd

    man = mf.get(args.problem, args.omega)
    drv = rd.driver(man, args.quad_degree) if man.kind == "rd" else suites._em_driver(man, args.quad_degree)
    rec = adaptive_loop(drv, man.mesh(args.n0), args.theta, args.max_iter, args.target)
    res = suites.SuiteResult("adapt", {"run": rec.to_dict(), "mode": man.mode}, checks=len(rec.iterations))
    bad = suites.adaptive_efficiency(rec, man.mode, args.tol)
    if bad:
        res.failures.append({"name": "efficiency-index", "iterations": bad})
    cols = ["iter", "n_dofs", "n_elements", "eta_sq", "e_sq", "efficiency_index", "marked_count"]
    rows = [[getattr(r, c) for c in cols] for r in rec.iterations]
    return [res], (cols, rows)


def _cmd_heat(args):
    res, run = suites.heat_suite(args.seed, args.steps, args.n, args.m, args.dt, args.tol)
    res.values["run"] = run.to_dict()
    rows = [[r.step, r.t, r.majorant, r.error_sq, r.relative_deviation] for r in run.records]
    wave = suites.wave_formula_suite(args.seed)
    return [res, wave], (["step", "t", "majorant", "error_sq", "relative_deviation"], rows)


def _cmd_eddy(args):
    results = [suites.eddy_suite(args.seed, args.count, args.max_dim, args.omega)]
    rows = []
    if args.fem != "none":
        omega = 1.0 if args.omega is None else args.omega
        res = suites.SuiteResult("eddy-fem")
        rep = suites.fem_check(args.fem, args.n, omega, approximation="galerkin")
        res.record(rep)
        res.values.update({k: rep.values[k] for k in ("majorant", "error_sq", "lower_bound", "upper_bound")})
        rows.append([args.fem, omega, rep.values["majorant"], rep.values["error_sq"], rep.passed])
        results.append(res)
    return results, (["problem", "omega", "majorant", "error_sq", "passed"], rows)


def _cmd_robin(args):
    res = suites.robin_suite(args.n, tuple(args.gamma.split(",")), args.quad_degree, args.tol)
    rows = [[k, v] for k, v in sorted(res.values.items()) if not isinstance(v, list)]
    return [res], (["quantity", "value"], rows)


_COMMANDS = {
    "verify-abstract": _cmd_verify_abstract,
    "verify-fem": _cmd_verify_fem,
    "adapt": _cmd_adapt,
    "heat": _cmd_heat,
    "eddy": _cmd_eddy,
    "robin": _cmd_robin,
}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, complex):
        return [v.real, v.imag]
    if hasattr(v, "item") and getattr(v, "ndim", 1) == 0:
        return _jsonable(v.item())
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _write_csv(path, header, rows):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def run(args):
    """Execute a parsed configuration; returns ``(exit_code, report_dict)``."""
    results, (header, rows) = _COMMANDS[args.command](args)
    passed = all(r.passed for r in results)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": _config_dict(args),
        "passed": passed,
        "suites": [r.to_dict() for r in results],
    }
    report = _jsonable(report)
    with open(args.output, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.csv:
        _write_csv(args.csv, header, rows)
    return (0 if passed else 1), report


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse(argv)
    except ConfigError as exc:
        print(f"majorant: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return int(exc.code) if exc.code is not None else 0
    code, report = run(args)
    for s in report["suites"]:
        print(f"{'PASS' if s['passed'] else 'FAIL'} {s['name']} ({s['checks']} checks)")
    print(f"report written to {args.output}")
    return code


if __name__ == "__main__":
    sys.exit(main())
