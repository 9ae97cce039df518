"""Laplace-transform harness and the golden density/transform matrix.

Each golden case pairs a density (or a moment / sampling identity) with its
closed-form counterpart and reports the worst residual over a grid.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .mixtures import (
    MixtureMethod,
    MixtureSpec,
    QKernelParams,
    mixture_density,
    mixture_laplace,
    q_kernel,
    q_kernel_atom,
    q_kernel_laplace,
)
from .mldist import (
    MLParams,
    beta_log_moment,
    ml_density,
    ml_log_moment,
    ml_sample,
    mlmc_step,
    product_density,
    product_log_moment,
    two_parameter,
)
from .mlfunc import PrabhakarParams, mittag_leffler
from .numkernel import DEFAULT_QUAD, QuadratureSpec, convolve_power, integrate_halfline
from .stable import StableSpec, stable_density

SCHEMA_VERSION = 1
SUITES = ("table1", "table2", "table3", "table4", "table5")


def numeric_laplace(density: Callable, x, quad: QuadratureSpec = DEFAULT_QUAD):
    """int_0^inf e^{-x t} density(t) dt for each x > 0 (one density pass for all x).

    The exp-sinh map clusters nodes double-exponentially at t = 0, so
    integrable power singularities of the density there need no special
    handling. Returns (values, error estimates) shaped like x.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0.0)):
        raise ValueError("numeric_laplace needs x > 0")
    xc = x.reshape(-1, 1)

    def integrand(t):
        d = np.asarray(density(t), dtype=float)
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            return np.where(d == 0.0, 0.0, d * np.exp(-xc * t))

    v, e = integrate_halfline(integrand, 0.0, quad)
    return v.reshape(x.shape), e.reshape(x.shape)


def empirical_laplace(samples, x):
    """Mean of e^{-x S} over the samples and its standard error."""
    s = np.asarray(samples, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("empirical_laplace needs at least one sample")
    vals = np.exp(-np.multiply.outer(np.asarray(x, dtype=float), s))
    est = vals.mean(axis=-1)
    se = vals.std(axis=-1, ddof=1) / math.sqrt(s.size) if s.size > 1 else np.zeros_like(est)
    return est, se


def direct_convolution(nu: float, f: Callable, t, quad: QuadratureSpec = DEFAULT_QUAD):
    """{rho_nu * f}(t) by brute-force quadrature of the defining integral (an oracle)."""
    return convolve_power(nu, f, t, quad)[0]


class CaseKind(enum.Enum):
    LAPLACE = "laplace"  # numeric LT of a density vs its closed transform
    MOMENT = "moment"  # analytic moment identity at k on the grid
    SAMPLING = "sampling"  # Monte Carlo moments within a standard-error band


@dataclass
class GoldenCase:
    """One replayed density/transform pair.

    LAPLACE: ``density(t)`` and ``transform(x)``; residual
    |LT - transform| / max(1, |transform|) over ``x_grid``.
    MOMENT: ``density(k)`` and ``transform(k)`` give the two sides.
    SAMPLING: ``density(seed)`` returns (mean, standard error) arrays over
    the grid of moment orders and ``transform(k)`` the exact moments; the
    residual is the z-score and the band is ``n_se``.
    """

    id: str
    source: str
    kind: CaseKind
    density: Callable
    transform: Callable
    x_grid: Sequence[float]
    tol: float = 1e-6
    n_se: float = 4.0
    seed: int = 20240501
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        grid = np.asarray(self.x_grid, dtype=float)
        if grid.size == 0:
            raise ValueError(f"case {self.id}: empty grid")
        if self.kind is CaseKind.LAPLACE and np.any(~(grid > 0.0)):
            raise ValueError(f"case {self.id}: transform grid must be strictly positive")
        if self.kind is not CaseKind.LAPLACE and np.any(~(grid >= 0.0)):
            raise ValueError(f"case {self.id}: moment orders must be nonnegative")
        if self.kind is not CaseKind.SAMPLING and not 0.0 < self.tol < 0.1:
            raise ValueError(f"case {self.id}: tolerance must lie in (0, 0.1)")


@dataclass
class VerifyReport:
    case_id: str
    source: str
    kind: str
    grid: list
    residuals: list
    max_residual: float
    threshold: float
    passed: bool
    wall_time: float
    error: str | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        return json.dumps(d, default=float)


def _run_case(case: GoldenCase, quad: QuadratureSpec) -> VerifyReport:
    grid = np.asarray(case.x_grid, dtype=float)
    start = time.perf_counter()
    threshold = case.n_se if case.kind is CaseKind.SAMPLING else case.tol
    try:
        if case.kind is CaseKind.LAPLACE:
            lhs, _ = numeric_laplace(lambda t: case.density(t, quad), grid, quad)
            rhs = np.asarray(case.transform(grid), dtype=float)
            res = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
        elif case.kind is CaseKind.MOMENT:
            lhs = np.asarray(case.density(grid), dtype=float)
            rhs = np.asarray(case.transform(grid), dtype=float)
            res = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
        else:
            mean, se = case.density(case.seed)
            res = np.abs(np.asarray(mean) - np.asarray(case.transform(grid))) / np.asarray(se)
        res = np.asarray(res, dtype=float)
        error = None
        passed = bool(np.all(np.isfinite(res)) and np.all(res <= threshold))
    except Exception as exc:  # a crash is a failed case, not a crashed suite
        res = np.full(grid.shape, np.nan)
        error = f"{type(exc).__name__}: {exc}"
        passed = False
    return VerifyReport(
        case_id=case.id,
        source=case.source,
        kind=case.kind.value,
        grid=grid.tolist(),
        residuals=res.tolist(),
        max_residual=float(np.max(res)) if np.all(np.isfinite(res)) else math.inf,
        threshold=threshold,
        passed=passed,
        wall_time=time.perf_counter() - start,
        error=error,
    )


def run_golden(cases: Sequence[GoldenCase], quad: QuadratureSpec = DEFAULT_QUAD) -> list[VerifyReport]:
    """One report per case, in case-id order (deterministic for fixed seeds and quad)."""
    return [_run_case(c, quad) for c in sorted(cases, key=lambda c: c.id)]


def summary_table(reports: Sequence[VerifyReport]) -> str:
    width = max([len(r.case_id) for r in reports] + [4])
    lines = [f"{'case'.ljust(width)}  {'kind':8}  {'max residual':>12}  {'limit':>8}  {'time/s':>7}  result"]
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        if r.error:
            status += f" ({r.error})"
        lines.append(
            f"{r.case_id.ljust(width)}  {r.kind:8}  {r.max_residual:12.3e}  {r.threshold:8.1e}  "
            f"{r.wall_time:7.2f}  {status}"
        )
    n_pass = sum(r.passed for r in reports)
    lines.append(f"{n_pass}/{len(reports)} cases passed")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# the shipped cases

_X = (0.5, 1.0, 2.0)
_K_PRODUCT = tuple(range(7))


def _ml_transform(p: MLParams):
    tp = PrabhakarParams(p.alpha, p.beta + p.theta, p.shape)
    scale = math.gamma(p.beta + p.theta)
    return lambda x: scale * mittag_leffler(tp, x)


def _density_case(case_id, source, p: MLParams, transform=None, tol=1e-6):
    return GoldenCase(
        case_id,
        source,
        CaseKind.LAPLACE,
        lambda t, quad: ml_density(p, t, quad=quad),
        transform or _ml_transform(p),
        _X,
        tol,
        params=asdict(p),
    )


def _mixture_case(case_id, source, spec: MixtureSpec, method=MixtureMethod.AUTO, tol=1e-6):
    return GoldenCase(
        case_id,
        source,
        CaseKind.LAPLACE,
        lambda t, quad: mixture_density(spec, t, method, quad),
        lambda x: mixture_laplace(spec, x),
        _X,
        tol,
        params={"sigma": spec.sigma, "lam": spec.lam, **asdict(spec.ml)},
    )


def _q_case(case_id, source, qp: QKernelParams, tol=1e-6):
    # the kernel's own transform misses the atom at 0 (present when beta - alpha gamma = 1)
    atom = q_kernel_atom(qp)
    return GoldenCase(
        case_id,
        source,
        CaseKind.LAPLACE,
        lambda u, quad: q_kernel(qp, u),
        lambda t: q_kernel_laplace(qp, t) - atom,
        _X,
        tol,
        params={"y": qp.y, **asdict(qp.ml)},
    )


def _product_moment_case(case_id, source, p: MLParams):
    return GoldenCase(
        case_id,
        source,
        CaseKind.MOMENT,
        lambda k: np.exp(product_log_moment(p, k)),
        lambda k: np.exp(ml_log_moment(p, k)),
        _K_PRODUCT,
        1e-12,
        params=asdict(p),
    )


def _sampling_case(case_id, source, p: MLParams, n=100_000, seed=20240501):
    def draw(s):
        x = ml_sample(p, n, s)
        pw = x[None, :] ** np.array([1.0, 2.0])[:, None]
        return pw.mean(axis=1), pw.std(axis=1, ddof=1) / math.sqrt(n)

    return GoldenCase(
        case_id, source, CaseKind.SAMPLING, draw, lambda k: np.exp(ml_log_moment(p, k)), (1.0, 2.0),
        seed=seed, params=asdict(p),
    )


def _mlmc_cases(alpha, theta, n_step):
    target = two_parameter(alpha, theta + n_step - 1.0)
    a, b = (theta + n_step - 1.0) / alpha + 1.0, 1.0 / alpha - 1.0
    source = "Table 4 row 4: Beta((theta+n-1)/alpha+1, 1/alpha-1) x ML(alpha, theta+n) = ML(alpha, theta+n-1)"
    tag = f"a{alpha:g}-th{theta:g}-n{n_step}"

    def moments(k):
        return np.exp(beta_log_moment(a, b, k) + ml_log_moment(two_parameter(alpha, theta + n_step), k))

    def chain(seed):
        gen = np.random.default_rng(seed)
        t_n = ml_sample(two_parameter(alpha, theta + n_step), 100_000, gen)
        t_prev = mlmc_step(alpha, theta, n_step, t_n, gen)
        pw = t_prev[None, :] ** np.array([1.0, 2.0])[:, None]
        return pw.mean(axis=1), pw.std(axis=1, ddof=1) / math.sqrt(t_prev.size)

    params = {"alpha": alpha, "theta": theta, "n": n_step}
    return [
        GoldenCase(f"T4.4-moments-{tag}", source, CaseKind.MOMENT, moments,
                   lambda k: np.exp(ml_log_moment(target, k)), _K_PRODUCT, 1e-12, params=params),
        GoldenCase(f"T4.4-mc-{tag}", source, CaseKind.SAMPLING, chain,
                   lambda k: np.exp(ml_log_moment(target, k)), (1.0, 2.0), params=params),
    ]


def _table1():
    src1 = "Table 1 row 1: p_alpha <-> E_alpha(-x)"
    cases = [
        _density_case("T1.1-a0.5", src1 + " (erfcx oracle)", MLParams(0.5), transform=special.erfcx),
        _density_case("T1.1-a0.4", src1, MLParams(0.4)),
        _density_case("T1.1-a0.6", src1, MLParams(0.6)),
        GoldenCase(
            "T1.1-stable-half",
            "Table 1 notes: f_alpha(t|u) <-> exp(-u x^alpha), alpha = 1/2",
            CaseKind.LAPLACE,
            lambda t, quad: stable_density(StableSpec(0.5, 1.0), t, quad=quad),
            lambda x: np.exp(-np.sqrt(x)),
            _X,
            params={"alpha": 0.5, "lam": 1.0},
        ),
        _mixture_case("T1.2-s0.4-a0.6", "Table 1 row 2: {alpha, sigma} mixing <-> E_alpha(-lam x^sigma)",
                      MixtureSpec(0.4, 1.0, MLParams(0.6))),
        _mixture_case("T1.2a-closed-form", "Table 1 row 2a: closed sigma = alpha density <-> E_alpha(-lam x^alpha)",
                      MixtureSpec(0.5, 2.0, MLParams(0.5)), MixtureMethod.CLOSED_FORM_LAMPERTI),
        _mixture_case("T1.2a-quadrature", "Table 1 row 2a: sigma = alpha mixture by quadrature",
                      MixtureSpec(0.6, 0.7, MLParams(0.6)), MixtureMethod.MIX_QUADRATURE),
    ]
    return cases


def _table2():
    src = "Table 2 row 1: p_{alpha,beta,gamma} <-> Gamma(beta) E^gamma_{alpha,beta}(-x)"
    three = MLParams(0.5, 1.25, 1.5)  # beta - alpha gamma = 1 - alpha keeps the mixtures fast
    return [
        _density_case("T2.1-a0.5-b1.2-g1", src, MLParams(0.5, 1.2, 1.0)),
        _density_case("T2.1-a0.6-b0.9-g0.5", src, MLParams(0.6, 0.9, 0.5)),
        _mixture_case("T2.2-s0.4", "Table 2 row 2: {alpha, sigma} mixing <-> Gamma(beta) E^gamma_{alpha,beta}(-lam x^sigma)",
                      MixtureSpec(0.4, 1.0, three)),
        _mixture_case("T2.2a-s0.5", "Table 2 row 2a: {alpha, alpha} mixing",
                      MixtureSpec(0.5, 1.5, three)),
    ]


def _table3():
    src = "Table 3 row 1: p_{alpha,beta,gamma,theta} <-> Gamma(beta+theta) E^{gamma+theta/alpha}_{alpha,beta+theta}(-x)"
    tilted = MLParams(0.5, 1.5, 2.0, 0.25)
    return [
        _density_case("T3.1-a0.6-b0.9-g0.5-th0.3", src, MLParams(0.6, 0.9, 0.5, 0.3)),
        _density_case("T3.1-a0.3-b2-g1-th-0.1", src, MLParams(0.3, 2.0, 1.0, -0.1)),
        _density_case("T3.1a-bml", "Table 3 row 1a: BML(alpha, theta, beta), gamma = 0", MLParams(0.5, 1.0, 0.0, 1.0)),
        _density_case("T3.2-tilted", "Table 3 row 2: beta - alpha gamma = 1 - alpha", tilted),
        _density_case("T3.2a-ml2-th1", "Table 3 row 2a: ML(alpha, theta)", MLParams(0.5, 1.0, 1.0, 1.0)),
        _density_case("T3.2a-ml2-th-0.2", "Table 3 row 2a: ML(alpha, theta), theta < 0", MLParams(0.4, 1.0, 1.0, -0.2)),
        _mixture_case("T3.3-s0.3", "Table 3 row 3: {alpha, sigma} mixing of the 4-parameter law",
                      MixtureSpec(0.3, 1.5, tilted)),
        _mixture_case("T3.3a-s0.5", "Table 3 row 3a: {alpha, alpha} mixing of the 4-parameter law",
                      MixtureSpec(0.5, 1.0, tilted)),
    ]


def _table4():
    general = MLParams(0.6, 0.9, 0.5, 0.3)
    bml = MLParams(0.5, 1.0, 0.0, 1.0)
    tilted = MLParams(0.5, 1.5, 2.0, 0.25)
    src1 = "Table 4 row 1: Beta(theta/alpha+gamma, beta/alpha-gamma) x ML(alpha, beta+theta)"
    src2 = "Table 4 row 2: Beta(theta/alpha, beta/alpha) x ML(alpha, beta+theta) = BML"
    src3 = "Table 4 row 3: Beta(theta/alpha+gamma, 1/alpha-1) x ML(alpha, beta+theta), beta - alpha gamma = 1 - alpha"
    cases = [
        _product_moment_case("T4.1-moments", src1, general),
        _sampling_case("T4.1-mc", src1, general),
        GoldenCase(
            "T4.1-density",
            "Table 4 footnote: density of T = V U <-> Gamma(beta+theta) E^{gamma+theta/alpha}_{alpha,beta+theta}(-x)",
            CaseKind.LAPLACE,
            lambda t, quad: product_density(general, t, quad),
            _ml_transform(general),
            _X,
            params=asdict(general),
        ),
        _product_moment_case("T4.2-moments", src2, bml),
        _sampling_case("T4.2-mc", src2, bml),
        _product_moment_case("T4.3-moments", src3, tilted),
        _sampling_case("T4.3-mc", src3, tilted),
    ]
    cases += _mlmc_cases(0.5, 0.0, 1)
    cases += _mlmc_cases(0.5, 1.0, 2)
    return cases


def _table5():
    return [
        _q_case("T5.1", "Table 5 row 1: closed sigma = alpha density <-> E_alpha(-lam x^alpha)",
                QKernelParams(MLParams(0.5), 1.5)),
        _q_case("T5.2-a0.6-b0.9-g1", "Table 5 row 2: 3-parameter kernel <-> x^(beta-1) E^gamma_{alpha,beta}(-lam x^alpha)",
                QKernelParams(MLParams(0.6, 0.9, 1.0), 1.0)),
        _q_case("T5.2-signed", "Table 5 row 2: signed kernel at (1/2, 3/2, 1, 0), plus its atom y^-gamma at 0",
                QKernelParams(MLParams(0.5, 1.5, 1.0), 1.0)),
        _q_case("T5.3-a0.5-b1.2-g1-th0.3", "Table 5 row 3: 4-parameter kernel",
                QKernelParams(MLParams(0.5, 1.2, 1.0, 0.3), 0.8)),
    ]


_BUILDERS = {"table1": _table1, "table2": _table2, "table3": _table3, "table4": _table4, "table5": _table5}


def golden_suite(name: str = "all") -> list[GoldenCase]:
    """Cases for one table ("table1" .. "table5") or "all"."""
    if name == "all":
        return [c for key in SUITES for c in _BUILDERS[key]()]
    if name not in _BUILDERS:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return _BUILDERS[name]()
