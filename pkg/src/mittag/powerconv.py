"""The convolution {rho_nu * f_alpha(.|lam)}(t) in its equivalent forms.

Its Laplace transform is x^(-nu) exp(-lam x^alpha). Every method reduces to
lam = 1 first via conv(t|lam) = lam^((nu-1)/alpha) conv(t lam^(-1/alpha)|1).
"""

from __future__ import annotations

import enum

import numpy as np
from scipy import special

from .numkernel import (
    DEFAULT_QUAD,
    MethodDomainError,
    PowerExponent,
    QuadratureError,
    QuadratureSpec,
    SeriesError,
    hankel_inversion,
    integrate_finite,
    integrate_halfline,
    log_recip_gamma,
)
from .stable import SERIES_THRESHOLD, StableSpec, stable_density, stable_density_lam

SERIES_TERMS = 200
_IM_REL_TOL = 1e-12  # roundoff bound below which AUTO accepts the contour integral
_IM_TRIAL_MIN_X = 0.05  # below this (lam = 1) the contour integral is never well conditioned
_EPS = np.finfo(float).eps


class ConvMethod(enum.Enum):
    RECIPROCAL_GAMMA_SERIES = "reciprocal-gamma-series"
    IM_INTEGRAL = "im-integral"
    STABLE_MIXTURE_QUADRATURE = "stable-mixture-quadrature"
    BETA_MIXTURE_QUADRATURE = "beta-mixture-quadrature"
    TILTING_CLOSED_FORM = "tilting-closed-form"
    AUTO = "auto"


def _nu_value(nu) -> float:
    return PowerExponent(nu.nu if isinstance(nu, PowerExponent) else float(nu)).nu


def _series_unit(nu, alpha, x, terms=SERIES_TERMS):
    """sum_k (-1)^k / k! x^(nu - alpha k - 1) / Gamma(nu - alpha k)."""
    k = np.arange(terms, dtype=float)[:, None]
    log_rg, sign_rg = log_recip_gamma(nu - alpha * k)
    logx = np.log(x)[None, :]
    log_mag = log_rg - special.gammaln(k + 1.0) + (nu - alpha * k - 1.0) * logx
    sgn = np.where(k % 2 == 0, 1.0, -1.0) * sign_rg
    with np.errstate(under="ignore"):
        terms_arr = np.where(sign_rg == 0.0, 0.0, sgn * np.exp(log_mag))
    total = terms_arr.sum(axis=0)
    abs_sum = np.abs(terms_arr).sum(axis=0)
    tail = np.abs(terms_arr[-2:]).max(axis=0)
    ok = tail <= _EPS * np.maximum(np.abs(total), 1e-300)
    return total, 4.0 * _EPS * abs_sum + tail, ok


def _im_integral_unit(nu, alpha, x, quad, with_magnitude=False):
    # G(s) = s^-nu exp(-s^alpha); the ray integrand ~ u^-nu needs a detour if nu >= 1
    radius = 0.0 if nu < 1.0 else 1.0 / x
    return hankel_inversion(
        lambda log_s: -nu * log_s - np.exp(alpha * log_s), x, quad, radius, with_magnitude
    )


def _weighted(dens, w):
    """dens * w where a vanishing density wins over an overflowing weight."""
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(dens == 0.0, 0.0, dens * w)


def _stable_mixture_unit(nu, alpha, x, quad):
    """lam-unit form int_0^inf f_alpha(x | 1 + r) r^(m-1)/Gamma(m) dr, m = nu/alpha.

    This is the unit-step construction: the mixing variable 1 + r has the
    shifted power density rho_m(u - 1) on (1, inf).
    """
    m = nu / alpha
    xc = x[:, None]
    log_norm = special.gammaln(m)

    def integrand(r):
        with np.errstate(under="ignore", over="ignore"):
            w = np.exp((m - 1.0) * np.log(r) - log_norm)
        return _weighted(stable_density_lam(alpha, xc, 1.0 + r, quad), w)

    return integrate_halfline(integrand, 0.0, quad)


def _beta_mixture_unit(nu, alpha, x, quad):
    """Gamma(1-m) int_0^1 f_alpha(x | 1/u) beta(u | 1-m, m) du / u, m = nu/alpha < 1."""
    m = nu / alpha
    xc = x[:, None]
    log_norm = -special.gammaln(m)  # Gamma(1-m) * B(1-m, m)^-1 = 1/Gamma(m)

    def dens(u):
        return stable_density_lam(alpha, xc, 1.0 / u, quad)

    def left(u):  # u in (0, 1/2)
        with np.errstate(over="ignore"):
            w = np.exp(log_norm - (m + 1.0) * np.log(u) + (m - 1.0) * np.log1p(-u))
        return _weighted(dens(u), w)

    def right(v):  # u = 1 - v, v in (0, 1/2)
        u = 1.0 - v
        w = np.exp(log_norm - (m + 1.0) * np.log(u) + (m - 1.0) * np.log(v))
        return _weighted(dens(u), w)

    v1, e1 = integrate_finite(left, 0.0, 0.5, quad)
    v2, e2 = integrate_finite(right, 0.0, 0.5, quad)
    return v1 + v2, e1 + e2


def powerconv_density(
    nu,
    spec: StableSpec,
    t,
    method: ConvMethod = ConvMethod.AUTO,
    quad: QuadratureSpec = DEFAULT_QUAD,
    full_output: bool = False,
):
    """{rho_nu * f_alpha(.|lam)}(t) for t > 0.

    AUTO uses the reciprocal-gamma series when t**alpha / lam >= 1.5; below
    that the contour (Im) integral where its measured cancellation is
    negligible, and the stable-mixture quadrature (positive integrand)
    elsewhere. nu = 0 is the
    stable density itself.
    """
    nu = _nu_value(nu)
    method = ConvMethod(method)
    alpha, lam = spec.alpha, spec.lam
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise ValueError("powerconv_density is defined for t > 0")
    shape = t.shape
    flat = t.ravel()

    def finish(value, err, labels):
        value = np.asarray(value, dtype=float).reshape(shape)
        if full_output:
            return value, np.asarray(err).reshape(shape), np.asarray(labels, dtype=object).reshape(shape)
        return value[()] if value.ndim == 0 else value

    if nu == 0.0:
        v, e, lab = stable_density(spec, flat, quad=quad, full_output=True)
        return finish(v, e, lab)

    if method is ConvMethod.TILTING_CLOSED_FORM:
        if abs(nu - (1.0 - alpha)) > 1e-14:
            raise MethodDomainError("the tilting closed form needs nu = 1 - alpha")
        v, e, _ = stable_density(spec, flat, quad=quad, full_output=True)
        scale = flat / (lam * alpha)
        return finish(scale * v, scale * e, np.full(flat.shape, method.value, dtype=object))
    if method is ConvMethod.BETA_MIXTURE_QUADRATURE and not nu < alpha:
        raise MethodDomainError("the beta-mixture form needs 0 < nu < alpha")

    x = flat * lam ** (-1.0 / alpha)
    value, err, labels = _unit_dispatch(nu, alpha, x, method, quad)
    out_scale = lam ** ((nu - 1.0) / alpha)
    return finish(value * out_scale, err * out_scale, labels)


def _unit_dispatch(nu, alpha, x, method, quad):
    """lam = 1 convolution on a flat array x >= 0 (the value at x = 0 is 0)."""
    value = np.zeros_like(x)
    err = np.zeros_like(x)
    labels = np.full(x.shape, "zero", dtype=object)
    if method is ConvMethod.AUTO:
        with np.errstate(divide="ignore"):
            use_series = alpha * np.log(x) >= np.log(SERIES_THRESHOLD)
        chosen = np.where(use_series, ConvMethod.RECIPROCAL_GAMMA_SERIES, ConvMethod.STABLE_MIXTURE_QUADRATURE)
        # the one-dimensional contour integral wherever its cancellation is harmless
        # (for alpha > 1/2 the ray integrand grows like exp(|cos(pi alpha)| u^alpha))
        trial = ~use_series & (x >= _IM_TRIAL_MIN_X) & (alpha <= 0.5)
        if np.any(trial):
            try:
                v, e, mag = _im_integral_unit(nu, alpha, x[trial], quad, with_magnitude=True)
                good = 4.0 * _EPS * mag <= _IM_REL_TOL * np.abs(v)
            except QuadratureError:
                good = None
            if good is not None:
                idx = np.flatnonzero(trial)[good]
                value[idx], err[idx] = v[good], e[good] + 4.0 * _EPS * mag[good]
                labels[idx] = ConvMethod.IM_INTEGRAL.value
                chosen[idx] = None
    else:
        chosen = np.full(x.shape, method, dtype=object)
    chosen[x == 0.0] = None
    for m in (
        ConvMethod.RECIPROCAL_GAMMA_SERIES,
        ConvMethod.IM_INTEGRAL,
        ConvMethod.STABLE_MIXTURE_QUADRATURE,
        ConvMethod.BETA_MIXTURE_QUADRATURE,
    ):
        sel = chosen == m
        if not np.any(sel):
            continue
        xs = x[sel]
        if m is ConvMethod.RECIPROCAL_GAMMA_SERIES:
            v, e, ok = _series_unit(nu, alpha, xs)
            if not np.all(ok):
                raise SeriesError(
                    f"reciprocal-gamma series did not converge in {SERIES_TERMS} terms "
                    f"at t*lam^(-1/alpha) = {xs[~ok].min():.6g}"
                )
        elif m is ConvMethod.IM_INTEGRAL:
            v, e = _im_integral_unit(nu, alpha, xs, quad)
        elif m is ConvMethod.STABLE_MIXTURE_QUADRATURE:
            v, e = _stable_mixture_unit(nu, alpha, xs, quad)
        else:
            v, e = _beta_mixture_unit(nu, alpha, xs, quad)
        value[sel] = v
        err[sel] = e
        labels[sel] = m.value
    return value, err, labels


def powerconv_laplace(nu, spec: StableSpec, x):
    """Closed-form transform x^(-nu) exp(-lam x^alpha)."""
    nu = _nu_value(nu)
    x = np.asarray(x, dtype=float)
    return np.exp(-nu * np.log(x) - spec.lam * x**spec.alpha)

