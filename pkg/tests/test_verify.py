import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from mittag.mldist import MLParams, ml_density
from mittag.stable import StableSpec, stable_density
from mittag.verify import (
    SCHEMA_VERSION,
    SUITES,
    CaseKind,
    GoldenCase,
    direct_convolution,
    empirical_laplace,
    golden_suite,
    numeric_laplace,
    run_golden,
    summary_table,
)


def test_numeric_laplace_half_normal():
    # the P_{1/2} density is the half-normal on scale sqrt 2: its transform is erfcx(x)
    v, err = numeric_laplace(lambda u: ml_density(MLParams(0.5), u), [0.5, 1.0, 2.0])
    assert_allclose(v, special.erfcx([0.5, 1.0, 2.0]), rtol=1e-8)
    assert np.all(err >= 0.0)
    assert_allclose(v[1], 0.4275836, rtol=1e-6)


def test_numeric_laplace_exponential():
    v, _ = numeric_laplace(lambda t: np.exp(-t), 1.0)
    assert_allclose(v, 0.5, rtol=1e-12)


def test_numeric_laplace_stable():
    v, _ = numeric_laplace(lambda t: stable_density(StableSpec(0.5), t), 1.0)
    assert_allclose(v, math.exp(-1.0), rtol=1e-9)


def test_numeric_laplace_shape_and_domain():
    v, e = numeric_laplace(lambda t: np.exp(-t), np.ones((2, 3)))
    assert v.shape == e.shape == (2, 3)
    with pytest.raises(ValueError):
        numeric_laplace(lambda t: np.exp(-t), [1.0, 0.0])


def test_empirical_laplace():
    est, se = empirical_laplace(np.full(10, 2.0), [0.5, 1.0])
    assert_allclose(est, np.exp([-1.0, -2.0]), rtol=1e-15)
    assert np.all(se <= 1e-15)
    est, se = empirical_laplace([3.0], 1.0)
    assert se == 0.0
    with pytest.raises(ValueError):
        empirical_laplace([], 1.0)


def test_empirical_laplace_exponential_samples():
    s = np.random.default_rng(3).exponential(size=100_000)
    est, se = empirical_laplace(s, [0.5, 2.0])
    assert np.all(np.abs(est - 1.0 / (1.0 + np.array([0.5, 2.0]))) <= 4.0 * se)


def test_direct_convolution_power():
    # rho_1 * e^{-s}: int_0^t e^{-s} ds = 1 - e^{-t}
    t = np.array([0.5, 2.0])
    assert_allclose(direct_convolution(1.0, lambda s: np.exp(-s), t), 1.0 - np.exp(-t), rtol=1e-10)


def _lt_case(**kw):
    base = dict(
        id="exp",
        source="test",
        kind=CaseKind.LAPLACE,
        density=lambda t, quad: np.exp(-t),
        transform=lambda x: 1.0 / (1.0 + x),
        x_grid=[0.5, 1.0],
    )
    base.update(kw)
    return GoldenCase(**base)


@pytest.mark.parametrize(
    "kw",
    [
        dict(x_grid=[]),
        dict(x_grid=[0.0, 1.0]),
        dict(tol=0.0),
        dict(tol=0.5),
        dict(kind=CaseKind.MOMENT, x_grid=[-1.0, 1.0]),
    ],
)
def test_case_validation(kw):
    with pytest.raises(ValueError):
        _lt_case(**kw)


def test_report_passes_iff_within_tolerance():
    good, bad = run_golden(
        [_lt_case(id="a"), _lt_case(id="b", transform=lambda x: 1.0 / (1.0 + x) + 1e-3)]
    )
    assert good.passed and good.max_residual <= good.threshold
    assert not bad.passed and bad.max_residual > bad.threshold
    assert_allclose(bad.max_residual, 1e-3, rtol=1e-6)


def test_crashing_case_is_a_failed_report():
    def boom(t, quad):
        raise ArithmeticError("nope")

    (r,) = run_golden([_lt_case(density=boom)])
    assert not r.passed and r.error.startswith("ArithmeticError") and r.max_residual == math.inf


def test_moment_and_sampling_kinds():
    m = GoldenCase("m", "test", CaseKind.MOMENT, lambda k: k + 1.0, lambda k: k + 1.0, [0, 1, 2])
    s = GoldenCase(
        "s", "test", CaseKind.SAMPLING, lambda seed: (np.array([1.1]), np.array([0.1])), lambda k: np.ones(1), [1]
    )
    rm, rs = run_golden([m, s])
    assert rm.passed and rm.max_residual == 0.0
    assert rs.passed and rs.threshold == 4.0
    assert_allclose(rs.max_residual, 1.0, rtol=1e-12)


def test_reports_sorted_and_serialisable():
    reports = run_golden([_lt_case(id="z"), _lt_case(id="a")])
    assert [r.case_id for r in reports] == ["a", "z"]
    d = json.loads(reports[0].to_json())
    assert d["schema_version"] == SCHEMA_VERSION
    assert {"case_id", "source", "max_residual", "passed"} <= set(d)
    table = summary_table(reports)
    assert "2/2 cases passed" in table


def test_unknown_suite():
    with pytest.raises(ValueError):
        golden_suite("bogus")


def test_suite_ids_unique_and_cited():
    cases = golden_suite("all")
    ids = [c.id for c in cases]
    assert len(ids) == len(set(ids))
    assert all(c.source for c in cases)
    assert sum(len(golden_suite(s)) for s in SUITES) == len(cases)


def test_table1_passes():
    reports = run_golden(golden_suite("table1"))
    assert reports and all(r.passed for r in reports), summary_table(reports)


def test_deterministic_replay():
    a = run_golden(golden_suite("table4"))
    b = run_golden(golden_suite("table4"))
    assert [r.residuals for r in a] == [r.residuals for r in b]
