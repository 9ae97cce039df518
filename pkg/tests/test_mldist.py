import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy import special

from mittag.mldist import (
    MLParams,
    SamplerStrategy,
    beta_log_moment,
    ml_density,
    ml_density_at_zero,
    ml_log_moment,
    ml_moment,
    ml_norm_const,
    ml_sample,
    mlmc_step,
    product_density,
    product_factors,
    product_log_moment,
    sample_two_parameter_exact,
    sample_two_parameter_metropolis,
    two_parameter,
)
from mittag.mlfunc import PrabhakarParams, mittag_leffler
from mittag.numkernel import integrate_halfline
from mittag.powerconv import ConvMethod
from mittag.stable import StableSpec, stable_density

NORM_SETS = [(0.5, 1, 1, 0), (0.5, 1, 1, 1), (0.5, 1.2, 1, 0), (0.4, 1, 1, -0.2), (0.5, 1, 0, 1)]


def half_normal(u):
    """P_(1/2) density exp(-u^2/4) / sqrt(pi)."""
    return np.exp(-0.25 * np.asarray(u) ** 2) / math.sqrt(math.pi)


def density_series_mp(alpha, beta, gamma_, theta, u, dps=50):
    """Gamma(beta+theta) rho_(gamma+theta/alpha)(u) sum_k (-u)^k / k! / Gamma(beta - alpha gamma - alpha k)."""
    with mpmath.workdps(dps):
        u = mpmath.mpf(u)
        nu = mpmath.mpf(beta) - mpmath.mpf(alpha) * gamma_
        s = mpmath.nsum(lambda k: (-u) ** k / mpmath.factorial(k) * mpmath.rgamma(nu - alpha * k), [0, mpmath.inf])
        g = mpmath.mpf(gamma_) + mpmath.mpf(theta) / alpha
        return float(mpmath.gamma(beta + theta) * u ** (g - 1) / mpmath.gamma(g) * s)


def moment_at(p, k):
    def f(u):
        d = ml_density(p, u)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(d == 0.0, 0.0, d * u**k)

    return integrate_halfline(f)[0]


# ---------------------------------------------------------------- parameters


@pytest.mark.parametrize(
    "args", [(0.0, 1, 1, 0), (1.0, 1, 1, 0), (0.5, 0.4, 1, 0), (0.5, 1, 1, -0.6), (0.5, 1, 1, math.nan)]
)
def test_inadmissible_rejected(args):
    with pytest.raises(ValueError, match="requires|finite"):
        MLParams(*args)


def test_derived_quantities():
    p = MLParams(0.4, 1.2, 0.5, 0.3)
    assert_allclose(p.conv_order, 1.0)
    assert_allclose(p.shape, 0.5 + 0.75)
    assert MLParams(0.5, 1.0, 1.0, 2.0).is_two_parameter_family
    assert MLParams(0.5, 1.5, 2.0, 0.0).is_two_parameter_family
    assert_allclose(MLParams(0.5, 1.5, 2.0, 0.0).tilt_theta, 0.5)


# ---------------------------------------------------------------- density


def test_density_examples():
    assert_allclose(ml_density_at_zero(MLParams(0.5)), 1.0 / math.sqrt(math.pi), rtol=1e-14)
    assert_allclose(ml_density(MLParams(0.5, 1, 1, 1), 1.0), 0.5 * half_normal(1.0), rtol=1e-9)
    p = MLParams(0.5)
    for m in (ConvMethod.AUTO, ConvMethod.RECIPROCAL_GAMMA_SERIES, ConvMethod.IM_INTEGRAL):
        assert_allclose(ml_density(p, 1.0, m), half_normal(1.0), rtol=1e-8)


def test_half_normal_wide_range():
    u = np.geomspace(1e-4, 12.0, 50)
    assert_allclose(ml_density(MLParams(0.5), u), half_normal(u), rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.3, 0.6, 0.8])
def test_one_parameter_closed_form(alpha):
    u = np.geomspace(0.05, 5.0, 12)
    ref = stable_density(StableSpec(alpha), u ** (-1.0 / alpha)) * u ** (-1.0 / alpha - 1.0) / alpha
    assert_allclose(ml_density(MLParams(alpha), u), ref, rtol=1e-8)


@pytest.mark.parametrize(
    "params", [(0.5, 1.2, 1.0, 0.0), (0.6, 0.9, 0.5, 0.0), (0.3, 2.0, 1.0, 0.0), (0.5, 1.0, 0.0, 1.0), (0.4, 1.5, 0.0, 0.7)]
)
def test_matches_density_series(params):
    # three-parameter laws (theta = 0) and BML laws (gamma = 0)
    u = np.array([0.2, 1.0, 2.5])
    ref = [density_series_mp(*params, ui) for ui in u]
    assert_allclose(ml_density(MLParams(*params), u), ref, rtol=1e-8)


def test_explicit_methods_agree():
    p = MLParams(0.6, 0.5, 0.5, 0.3)
    u = np.array([0.3, 1.0, 2.0])
    ref = ml_density(p, u)
    for m in (ConvMethod.STABLE_MIXTURE_QUADRATURE, ConvMethod.BETA_MIXTURE_QUADRATURE):
        assert_allclose(ml_density(p, u, m), ref, rtol=1e-8)


def test_density_domain():
    with pytest.raises(ValueError):
        ml_density(MLParams(0.5), 0.0)
    with pytest.raises(ValueError):
        ml_density(MLParams(0.5), 1.0, ConvMethod.TILTING_CLOSED_FORM.value + "x")


@pytest.mark.parametrize("params", NORM_SETS)
def test_normalisation(params):
    v, _ = integrate_halfline(lambda u: ml_density(MLParams(*params), u))
    assert abs(v - 1.0) <= 1e-7


@pytest.mark.parametrize("params", NORM_SETS)
def test_moment_density_consistency(params):
    p = MLParams(*params)
    for k in (1, 2, 3):
        m = ml_moment(p, k)
        assert abs(moment_at(p, k) - m) <= 1e-5 * m


@pytest.mark.parametrize("params", [(0.5, 1, 1, 0), (0.4, 1, 1, -0.2), (0.6, 0.9, 0.5, 0.3), (0.5, 1, 0, 1)])
def test_laplace_duality(params):
    p = MLParams(*params)
    x = np.array([0.5, 1.0, 2.0, 5.0])

    def f(u):
        d = ml_density(p, u)
        with np.errstate(under="ignore"):
            e = np.exp(-x[:, None] * u)
        return np.where(e == 0.0, 0.0, e * d)

    v, _ = integrate_halfline(f)
    ref = math.gamma(p.beta + p.theta) * mittag_leffler(PrabhakarParams(p.alpha, p.beta + p.theta, p.shape), x)
    assert_allclose(v, ref, rtol=1e-6)


def test_at_zero_finite_and_diverging():
    assert ml_density_at_zero(MLParams(0.5, 1, 1, 1)) == 0.0
    assert ml_density_at_zero(MLParams(0.4, 1, 1, -0.2)) == math.inf


# ---------------------------------------------------------------- moments


def test_moment_examples():
    assert ml_moment(MLParams(0.5), 0) == 1.0
    assert_allclose(ml_moment(MLParams(0.5), 1), 2.0 / math.sqrt(math.pi), rtol=1e-14)
    assert_allclose(ml_moment(MLParams(0.5, 1, 1, 1), 1), 2.2567583342, rtol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_moment_zero_is_one(alpha, frac, extra, theta_frac):
    gamma_ = 2.0 * frac
    beta = alpha * gamma_ + 0.01 + extra
    theta = -alpha * gamma_ + 0.01 + theta_frac
    assert ml_moment(MLParams(alpha, beta, gamma_, theta), 0.0) == 1.0


def test_moment_exponent_bound():
    with pytest.raises(ValueError):
        ml_moment(MLParams(0.5), -1.0)
    assert math.isfinite(ml_moment(MLParams(0.5), -0.5))


def test_norm_const_examples():
    assert_allclose(ml_norm_const(0.5, 1.0, 0.0), 0.5, rtol=1e-14)
    assert_allclose(ml_norm_const(0.5, 1.0, 1.0), 1.0 / 6.0, rtol=1e-14)
    assert_allclose(ml_norm_const(0.3, 1e-13, 0.7), 1.0, rtol=1e-10)


def test_product_factor_examples():
    f = product_factors(MLParams(0.5, 1, 1, 0))
    assert (f.beta_a, f.beta_b, f.ml2_theta) == (1.0, 1.0, 1.0)
    f = product_factors(MLParams(0.5, 1, 0, 1))
    assert (f.beta_a, f.beta_b, f.ml2_theta) == (2.0, 2.0, 2.0)
    p = MLParams(0.5, 1, 1, 1)
    assert_allclose(math.exp(product_log_moment(p, 1)), 2.2567583342, rtol=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.05, 0.95),
    st.floats(0.0, 1.0),
    st.floats(0.01, 3.0),
    st.floats(0.01, 3.0),
    st.integers(0, 6),
)
def test_product_moment_identity(alpha, frac, extra, theta_extra, k):
    gamma_ = 2.0 * frac
    p = MLParams(alpha, alpha * gamma_ + extra, gamma_, -alpha * gamma_ + theta_extra)
    assert abs(product_log_moment(p, k) - ml_log_moment(p, k)) <= 1e-12 * max(1.0, abs(ml_log_moment(p, k)))


def test_beta_log_moment():
    assert_allclose(np.exp(beta_log_moment(2.0, 3.0, 1)), 2.0 / 5.0, rtol=1e-14)


@pytest.mark.parametrize("params", [(0.5, 1.2, 1.0, 0.0), (0.6, 0.9, 0.5, 0.3), (0.5, 1.0, 0.0, 1.0)])
def test_product_density_route(params):
    p = MLParams(*params)
    t = np.array([0.1, 0.7, 2.0, 4.0])
    assert_allclose(product_density(p, t), ml_density(p, t), rtol=1e-9)


# ---------------------------------------------------------------- samplers


def _check_moments(x, p, ks=(1, 2), n_se=4.0, se_scale=1.0):
    for k in ks:
        xk = x**k
        se = se_scale * xk.std(ddof=1) / math.sqrt(x.size)
        assert abs(xk.mean() - ml_moment(p, k)) <= n_se * se, (k, xk.mean(), ml_moment(p, k), se)


def test_stable_transform_mean():
    p = MLParams(0.5)
    x = ml_sample(p, 100_000, 7, SamplerStrategy.STABLE_TRANSFORM)
    _check_moments(x, p, ks=(1,))


@pytest.mark.parametrize("alpha, theta", [(0.5, 1.0), (0.3, -0.2), (0.7, 2.5)])
def test_tilted_exact_moments(alpha, theta):
    p = two_parameter(alpha, theta)
    _check_moments(sample_two_parameter_exact(alpha, theta, 100_000, 11), p)


def test_tilted_exact_matches_tilted_half_normal():
    from scipy import stats

    # ML(1/2, 1) has density u^2 exp(-u^2/4) / (2 sqrt(pi)), i.e. sqrt(2) times a chi(3) variable
    x = sample_two_parameter_exact(0.5, 1.0, 20_000, 3)
    assert stats.kstest(x / math.sqrt(2.0), stats.chi(3).cdf).pvalue > 0.01


def _batch_means_se(x, n_batches=100):
    means = x[: x.size // n_batches * n_batches].reshape(n_batches, -1).mean(axis=1)
    return means.std(ddof=1) / math.sqrt(n_batches)


def test_metropolis_moments():
    # chain draws are correlated, so the standard error comes from batch means
    p = two_parameter(0.5, 1.0)
    x = sample_two_parameter_metropolis(0.5, 1.0, 100_000, 5)
    for k in (1, 2):
        se = _batch_means_se(x**k)
        assert abs((x**k).mean() - ml_moment(p, k)) <= 4.0 * se


def test_metropolis_via_ml_sample():
    p = MLParams(0.5, 1, 1, 1)
    x = ml_sample(p, 50_000, 9, SamplerStrategy.TILTED_METROPOLIS)
    assert abs(x.mean() - ml_moment(p, 1)) <= 4.0 * _batch_means_se(x)


@pytest.mark.parametrize("params", [(0.5, 1.2, 1.0, 0.0), (0.6, 0.9, 0.5, 0.3), (0.5, 1.0, 0.0, 1.0), (0.4, 2.0, 1.5, -0.3)])
def test_beta_product_moments(params):
    p = MLParams(*params)
    _check_moments(ml_sample(p, 100_000, 13, SamplerStrategy.BETA_PRODUCT), p)


def test_sampler_deterministic():
    p = MLParams(0.6, 0.9, 0.5, 0.3)
    assert np.array_equal(ml_sample(p, 50, 1), ml_sample(p, 50, 1))
    assert np.array_equal(ml_sample(p, 50, 1, "beta-product"), ml_sample(p, 50, 1))


def test_strategy_mismatch():
    with pytest.raises(ValueError):
        ml_sample(MLParams(0.5, 1, 1, 1), 10, 1, SamplerStrategy.STABLE_TRANSFORM)
    with pytest.raises(ValueError):
        ml_sample(MLParams(0.5, 1.2, 1, 0), 10, 1, SamplerStrategy.TILTED_EXACT)
    with pytest.raises(ValueError):
        ml_sample(MLParams(0.5), 10, 1, "nonsense")
    with pytest.raises(ValueError):
        ml_sample(MLParams(0.5), -1, 1)


@pytest.mark.parametrize("alpha, theta, n", [(0.5, 0.0, 1), (0.5, 1.0, 2), (0.3, 0.4, 3)])
def test_mlmc_step(alpha, theta, n):
    t_n = sample_two_parameter_exact(alpha, theta + n, 100_000, 21)
    t_prev = mlmc_step(alpha, theta, n, t_n, 22)
    _check_moments(t_prev, two_parameter(alpha, theta + n - 1))


def test_mlmc_domain():
    with pytest.raises(ValueError):
        mlmc_step(0.5, 0.0, 0, [1.0], 1)
    with pytest.raises(ValueError):
        mlmc_step(0.5, 0.0, 1, [-1.0], 1)
    with pytest.raises(ValueError):
        mlmc_step(1.0, 0.0, 1, [1.0], 1)
