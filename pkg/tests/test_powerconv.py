import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mittag.numkernel import MethodDomainError, PowerExponent, convolve_power, integrate_halfline
from mittag.powerconv import ConvMethod, _series_unit, powerconv_density, powerconv_laplace
from mittag.stable import StableSpec, stable_density

HALF = StableSpec(0.5, 1.0)
LEVY_T1 = 0.2196956447  # f_{1/2}(1 | 1)

EXPLICIT = (
    ConvMethod.RECIPROCAL_GAMMA_SERIES,
    ConvMethod.IM_INTEGRAL,
    ConvMethod.STABLE_MIXTURE_QUADRATURE,
    ConvMethod.BETA_MIXTURE_QUADRATURE,
)


def test_nu_zero_is_stable_density():
    assert_allclose(powerconv_density(0.0, HALF, 1.0), LEVY_T1, rtol=1e-9)


def test_tilting_closed_form_example():
    for m in (ConvMethod.AUTO, ConvMethod.TILTING_CLOSED_FORM, ConvMethod.IM_INTEGRAL):
        assert_allclose(powerconv_density(0.5, HALF, 1.0, m), 2.0 * LEVY_T1, rtol=1e-9)


def test_direct_quadrature_oracle():
    # rho_(1/4) * f_(1/2) at t = 2 with the closed-form stable density as integrand
    ref, _ = convolve_power(0.25, lambda s: stable_density(HALF, s, "closed-form-half"), 2.0)
    assert_allclose(powerconv_density(0.25, HALF, 2.0), ref, rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.4, 0.5, 0.6])
@pytest.mark.parametrize("nu_kind", ["small", "tilt", "below_alpha"])
@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_methods_agree(alpha, nu_kind, lam):
    nu = {"small": 0.1, "tilt": 1.0 - alpha, "below_alpha": 0.9 * alpha}[nu_kind]
    spec = StableSpec(alpha, lam)
    t = np.array([0.5, 1.0, 3.0])
    ref = powerconv_density(nu, spec, t, ConvMethod.STABLE_MIXTURE_QUADRATURE)
    for m in EXPLICIT:
        if m is ConvMethod.BETA_MIXTURE_QUADRATURE and not nu < alpha:
            continue
        if m is ConvMethod.RECIPROCAL_GAMMA_SERIES:
            # the series is only trusted where it is well conditioned
            ok = t**alpha / lam >= 1.5
            if np.any(ok):
                assert_allclose(powerconv_density(nu, spec, t[ok], m), ref[ok], rtol=1e-6)
            continue
        assert_allclose(powerconv_density(nu, spec, t, m), ref, rtol=1e-6)
    if abs(nu - (1.0 - alpha)) < 1e-14:
        tilt = powerconv_density(nu, spec, t, ConvMethod.TILTING_CLOSED_FORM)
        assert_allclose(tilt, ref, rtol=1e-6)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7])
def test_series_matches_tilting(alpha):
    spec = StableSpec(alpha, 1.0)
    t = np.geomspace(2.0 ** (1.0 / alpha), 30.0 ** (1.0 / alpha), 6)
    series = powerconv_density(1.0 - alpha, spec, t, ConvMethod.RECIPROCAL_GAMMA_SERIES)
    tilt = t * stable_density(spec, t) / alpha
    assert_allclose(series, tilt, rtol=1e-8)


def test_series_passes_through_poles():
    # nu - alpha k hits 0, -1 at k = 2, 4 for nu = 1, alpha = 1/2; those terms vanish
    x = np.array([3.0, 10.0])
    v, _, ok = _series_unit(1.0, 0.5, x)
    assert np.all(ok) and np.all(np.isfinite(v))
    # G(s) = s^-1 exp(-s^(1/2)) inverts to P(S <= t) for the stable law: erfc(1/(2 sqrt t))
    from scipy.special import erfc

    assert_allclose(v, erfc(0.5 / np.sqrt(x)), rtol=1e-12)


@pytest.mark.parametrize("nu, alpha, lam", [(0.3, 0.5, 1.0), (0.5, 0.4, 0.5), (0.8, 0.6, 1.0), (1.3, 0.5, 1.0)])
def test_laplace_identity(nu, alpha, lam):
    spec = StableSpec(alpha, lam)
    for x in (0.5, 1.0, 2.0):
        v, _ = integrate_halfline(
            lambda t: np.where(np.exp(-x * t) == 0.0, 0.0, np.exp(-x * t) * powerconv_density(nu, spec, t))
        )
        assert abs(v - powerconv_laplace(nu, spec, x)) <= 1e-6 * powerconv_laplace(nu, spec, x)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.05, 1.5), st.floats(0.2, 5.0), st.floats(0.05, 50.0))
def test_scaling_law(alpha, nu, lam, t):
    lhs = powerconv_density(nu, StableSpec(alpha, lam), t)
    rhs = lam ** ((nu - 1.0) / alpha) * powerconv_density(nu, StableSpec(alpha, 1.0), t * lam ** (-1.0 / alpha))
    assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-300)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 0.9), st.floats(0.05, 1.5), st.floats(0.01, 100.0))
def test_nonnegative(alpha, nu, t):
    assert powerconv_density(nu, StableSpec(alpha), t) >= 0.0


def test_domain_errors():
    with pytest.raises(MethodDomainError):
        powerconv_density(0.3, HALF, 1.0, ConvMethod.TILTING_CLOSED_FORM)
    with pytest.raises(MethodDomainError):
        powerconv_density(0.6, HALF, 1.0, ConvMethod.BETA_MIXTURE_QUADRATURE)
    with pytest.raises(ValueError):
        powerconv_density(0.3, HALF, -1.0)
    with pytest.raises(ValueError):
        powerconv_density(-0.3, HALF, 1.0)


def test_accepts_power_exponent_and_labels():
    v, err, labels = powerconv_density(PowerExponent(0.3), HALF, [0.2, 1.0, 20.0], full_output=True)
    assert v.shape == err.shape == labels.shape == (3,)
    assert labels[-1] == ConvMethod.RECIPROCAL_GAMMA_SERIES.value
    assert np.all(err <= 1e-10 * v)


def test_laplace_closed_form():
    assert_allclose(powerconv_laplace(0.5, HALF, 4.0), 0.5 * math.exp(-2.0), rtol=1e-15)
