"""Command-line front end: eval, moments, sample, verify.

Data goes to stdout (or --output), diagnostics to stderr. Exit codes:
0 success, 1 failing verification cases, 2 configuration / parameter errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time

import numpy as np

from .mixtures import MixtureMethod, MixtureSpec, QKernelParams, mixture_density, q_kernel
from .mldist import MLParams, SamplerStrategy, ml_density, ml_moment, ml_sample
from .mlfunc import PrabhakarParams, mittag_leffler
from .numkernel import DEFAULT_QUAD, QuadratureSpec, integrate_halfline
from .powerconv import ConvMethod, powerconv_density
from .stable import StableMethod, StableSpec, stable_density
from .verify import SCHEMA_VERSION, SUITES, golden_suite, run_golden, summary_table

SEED_ENV = "ML_DIST_SEED"
_EPS = np.finfo(float).eps


class ConfigError(Exception):
    """Bad command-line configuration (exit code 2)."""


def fmt(v):
    """17 significant digits, round-trip safe."""
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _json_value(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g") if math.isfinite(v) else "null"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    return json.dumps(str(v))


def json_line(obj: dict) -> str:
    return _json_value({"schema_version": SCHEMA_VERSION, **obj})


def write_rows(out, rows: list[dict], columns: list[str], fmt_name: str):
    if fmt_name == "json":
        for r in rows:
            out.write(json_line(r) + "\n")
        return
    w = csv.writer(out)
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in columns])


# ---------------------------------------------------------------------------
# argument helpers


def parse_grid(spec: str, spacing: str) -> np.ndarray:
    """start:stop:count, geometric unless spacing == 'linear'."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--grid expects start:stop:count, got {spec!r}")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"--grid expects start:stop:count, got {spec!r}") from exc
    if count < 1:
        raise ConfigError("--grid needs a count of at least 1")
    if spacing == "linear":
        return np.linspace(start, stop, count)
    if not (start > 0.0 and stop > 0.0):
        raise ConfigError("a geometric grid needs positive endpoints (use --spacing linear otherwise)")
    return np.geomspace(start, stop, count)


def _points(args) -> np.ndarray:
    pts = []
    if args.points:
        pts.extend(args.points)
    if args.grid:
        pts.extend(parse_grid(args.grid, args.spacing).tolist())
    if not pts:
        raise ConfigError("give evaluation points with --t/--x/--u or --grid")
    return np.asarray(pts, dtype=float)


def _quad(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(
            rel_tol=args.rel_tol if args.rel_tol is not None else DEFAULT_QUAD.rel_tol,
            abs_tol=args.abs_tol if args.abs_tol is not None else DEFAULT_QUAD.abs_tol,
            max_nodes=args.max_nodes if args.max_nodes is not None else DEFAULT_QUAD.max_nodes,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _ml_params(args) -> MLParams:
    return MLParams(args.alpha, args.beta, args.gamma, args.theta)


def _enum(enum_cls, name: str):
    try:
        return enum_cls(name)
    except ValueError as exc:
        choices = ", ".join(m.value for m in enum_cls)
        raise ConfigError(f"unknown method {name!r}; choose from {choices}") from exc


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    seed = int(np.random.SeedSequence().entropy % (2**64))
    print(f"seed {seed} (from OS entropy)", file=sys.stderr)
    return seed


# ---------------------------------------------------------------------------
# subcommands


def cmd_eval(args, out) -> int:
    pts = _points(args)
    quad = _quad(args)
    subject = args.subject
    method = args.method
    if subject == "stable":
        m = StableMethod.CLOSED_FORM_HALF if args.closed_form else _enum(StableMethod, method)
        v, e, lab = stable_density(StableSpec(args.alpha, args.lam), pts, m, quad, full_output=True)
    elif subject == "mlfunc":
        v, e, lab = mittag_leffler(PrabhakarParams(args.alpha, args.beta, args.gamma), pts, quad, full_output=True)
    elif subject == "mldensity":
        v, e, lab = ml_density(_ml_params(args), pts, _enum(ConvMethod, method), quad, full_output=True)
    elif subject == "powerconv":
        if args.nu is None:
            raise ConfigError("powerconv needs --nu")
        v, e, lab = powerconv_density(
            args.nu, StableSpec(args.alpha, args.lam), pts, _enum(ConvMethod, method), quad, full_output=True
        )
    elif subject == "mixture":
        if args.sigma is None:
            raise ConfigError("mixture needs --sigma")
        m = MixtureMethod.CLOSED_FORM_LAMPERTI if args.closed_form else _enum(MixtureMethod, method)
        spec = MixtureSpec(args.sigma, args.lam, _ml_params(args))
        v, e, lab = mixture_density(spec, pts, m, quad, full_output=True)
    elif subject == "qkernel":
        v = q_kernel(QKernelParams(_ml_params(args), args.y), pts)
        e = 8.0 * _EPS * np.abs(v)
        lab = np.full(pts.shape, "closed-form", dtype=object)
    else:  # argparse restricts the choices
        raise ConfigError(f"unknown subject {subject!r}")
    v, e, lab = np.atleast_1d(v), np.atleast_1d(e), np.atleast_1d(lab)
    rows = [
        {"point": float(p), "value": float(a), "method": str(m), "est_error": float(b)}
        for p, a, m, b in zip(pts, v, lab, e)
    ]
    write_rows(out, rows, ["point", "value", "method", "est_error"], args.format)
    return 0


def _quadrature_moment(p: MLParams, k: int, quad: QuadratureSpec) -> float:
    def integrand(u):
        d = ml_density(p, u, quad=quad)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(d == 0.0, 0.0, d * u**k)

    return float(integrate_halfline(integrand, 0.0, quad)[0])


def cmd_moments(args, out) -> int:
    if args.k_max < 0:
        raise ConfigError("--k-max must be nonnegative")
    p = _ml_params(args)
    quad = _quad(args)
    rows = []
    for k in range(args.k_max + 1):
        exact = float(ml_moment(p, k))
        quad_val = _quadrature_moment(p, k, quad) if args.quadrature else None
        rows.append({"k": k, "analytic": exact, "quadrature": quad_val})
    write_rows(out, rows, ["k", "analytic", "quadrature"], args.format)
    return 0


def cmd_sample(args, out) -> int:
    if args.n < 1:
        raise ConfigError("-n must be at least 1")
    p = _ml_params(args)
    strategy = _enum(SamplerStrategy, args.strategy)
    seed = _seed(args)
    x = ml_sample(p, args.n, seed, strategy)
    if args.format == "json":
        for v in x:
            out.write(json_line({"value": float(v)}) + "\n")
        summary = {"summary": True, "n": args.n, "seed": seed, "strategy": strategy.value,
                   "mean": float(x.mean()), "variance": float(x.var(ddof=1)) if x.size > 1 else 0.0}
        for k in (1, 2):
            exact = float(ml_moment(p, k))
            se = float(np.std(x**k, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.inf
            summary[f"moment{k}"] = float(np.mean(x**k))
            summary[f"moment{k}_exact"] = exact
            summary[f"moment{k}_zscore"] = (float(np.mean(x**k)) - exact) / se if se > 0 else None
        out.write(json_line(summary) + "\n")
    else:
        w = csv.writer(out)
        w.writerow(["value"])
        for v in x:
            w.writerow([fmt(float(v))])
    return 0


def cmd_verify(args, out) -> int:
    if args.suite not in SUITES + ("all",):
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES + ('all',))}")
    quad = _quad(args)
    start = time.perf_counter()
    reports = run_golden(golden_suite(args.suite), quad)
    for r in reports:
        d = json.loads(r.to_json())
        d.pop("schema_version", None)
        out.write(json_line(d) + "\n")
    print(summary_table(reports), file=sys.stderr)
    print(f"total wall time {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mittag", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", "-o", help="write data here instead of stdout")
    common.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    common.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    common.add_argument("--max-nodes", type=int, help="quadrature node budget")

    ml = argparse.ArgumentParser(add_help=False)
    ml.add_argument("--alpha", type=float, required=True)
    ml.add_argument("--beta", type=float, default=1.0)
    ml.add_argument("--gamma", type=float, default=1.0)
    ml.add_argument("--theta", type=float, default=0.0)

    ev = sub.add_parser("eval", parents=[common, ml], help="evaluate a density or function on points")
    ev.add_argument("subject", choices=("stable", "mlfunc", "mldensity", "mixture", "qkernel", "powerconv"))
    ev.add_argument("--t", "--x", "--u", dest="points", type=float, nargs="+", help="evaluation points")
    ev.add_argument("--grid", help="start:stop:count")
    ev.add_argument("--spacing", choices=("geometric", "linear"), default="geometric")
    ev.add_argument("--lambda", dest="lam", type=float, default=1.0)
    ev.add_argument("--sigma", type=float)
    ev.add_argument("--nu", type=float)
    ev.add_argument("--y", type=float, default=1.0)
    ev.add_argument("--method", default="auto")
    ev.add_argument("--closed-form", action="store_true", help="closed form (stable alpha=1/2, mixture sigma=alpha)")
    ev.set_defaults(func=cmd_eval)

    mo = sub.add_parser("moments", parents=[common, ml], help="moments of ML(alpha, beta, gamma, theta)")
    mo.add_argument("--k-max", type=int, default=3)
    mo.add_argument("--quadrature", action="store_true", help="also integrate u^k p(u) numerically")
    mo.set_defaults(func=cmd_moments)

    sa = sub.add_parser("sample", parents=[common, ml], help="draw samples")
    sa.add_argument("-n", type=int, default=1000)
    sa.add_argument("--seed", type=int, help=f"falls back to ${SEED_ENV}")
    sa.add_argument("--strategy", default="auto", help=", ".join(s.value for s in SamplerStrategy))
    sa.set_defaults(func=cmd_sample)

    ve = sub.add_parser("verify", parents=[common], help="run the golden density/transform matrix")
    ve.add_argument("--suite", default="all", help=", ".join(SUITES + ("all",)))
    ve.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
