"""One-sided stable law with Laplace transform exp(-lam * x**alpha)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .numkernel import (
    DEFAULT_QUAD,
    MethodDomainError,
    QuadratureSpec,
    SeriesError,
    as_generator,
    convolve_power,
    hankel_inversion,
    integrate_finite,
    sinpi,
)

SERIES_THRESHOLD = 1.5  # series used when t**alpha / lam >= this
SERIES_TERMS = 200
_SERIES_BLOCK = 20
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class StableSpec:
    alpha: float
    lam: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"stable index alpha must lie in (0, 1), got {self.alpha}")
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"stable scale lambda must be positive, got {self.lam}")


class StableMethod(enum.Enum):
    POLLARD_SERIES = "pollard-series"
    POLLARD_INTEGRAL = "pollard-integral"
    ZOLOTAREV = "zolotarev"
    CLOSED_FORM_HALF = "closed-form-half"
    AUTO = "auto"


def zolotarev_a(w, alpha: float, reflected: bool = False):
    """Kernel A(w) of the Zolotarev/Kanter representation on (0, pi).

    With ``reflected`` the argument is pi - w, which keeps full relative
    precision near w = pi where A blows up.
    """
    w = np.asarray(w, dtype=float)
    sin_w = np.sin(w)
    if reflected:
        w = np.pi - w
    sa = np.sin(alpha * w)
    return (sa / sin_w) ** (1.0 / (1.0 - alpha)) * np.sin((1.0 - alpha) * w) / sa


def zolotarev_a_min(alpha: float) -> float:
    """A(0+) = alpha^(alpha/(1-alpha)) (1-alpha), the minimum of A."""
    return alpha ** (alpha / (1.0 - alpha)) * (1.0 - alpha)


def _series_unit(alpha, logx, log_scale=0.0, terms=SERIES_TERMS):
    """scale * (Pollard series at lam = 1); returns (value, error bound, converged).

    Summed in blocks, stopping once the last two terms are negligible everywhere.
    """
    logx = logx[None, :]
    log_scale = np.asarray(log_scale)[None, ...]
    total = np.zeros(logx.shape[1:])
    abs_sum = np.zeros_like(total)
    tail = np.full_like(total, np.inf)
    for start in range(1, terms + 1, _SERIES_BLOCK):
        k = np.arange(start, min(start + _SERIES_BLOCK, terms + 1), dtype=float)[:, None]
        log_mag = special.gammaln(alpha * k + 1.0) - special.gammaln(k + 1.0) - (alpha * k + 1.0) * logx + log_scale
        sgn = np.where(k % 2 == 1, 1.0, -1.0) * sinpi(alpha * k)
        with np.errstate(under="ignore"):
            block = sgn * np.exp(log_mag) / np.pi
        total = total + block.sum(axis=0)
        abs_sum = abs_sum + np.abs(block).sum(axis=0)
        # sin(pi alpha k) can vanish at a single k, never at two consecutive ones
        tail = np.abs(block[-2:]).max(axis=0)
        if np.all(tail <= _EPS * np.abs(total)):
            break
    err = 4.0 * _EPS * abs_sum + tail
    converged = tail <= _EPS * np.maximum(np.abs(total), 1e-300)
    return total, err, converged


def _zolotarev_unit(alpha, logx, log_scale, quad):
    """scale * (Zolotarev integral at lam = 1), with exp(-A(0) z) factored out."""
    c = 1.0 / (1.0 - alpha)
    with np.errstate(over="ignore"):
        z = np.exp(-alpha * c * logx)
    a0 = zolotarev_a_min(alpha)
    log_pref = math.log(alpha * c / np.pi) - c * logx - a0 * z + log_scale
    # the integral is at most of order max(1, 1/z); elsewhere the result underflows
    live = log_pref + np.maximum(0.0, alpha * c * logx) > -750.0
    value = np.zeros_like(logx)
    err = np.zeros_like(logx)
    if not np.any(live):
        return value, err
    zc = z[live][:, None]

    def integrand(a):
        # A exp(-(A - A0) z) -> 0 as A -> inf, including where A overflows
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            out = a * np.exp(-(a - a0) * zc)
        return np.where(np.isfinite(a), out, 0.0)

    def near_zero(w):
        return integrand(zolotarev_a(w, alpha))

    def near_pi(w):
        with np.errstate(over="ignore", divide="ignore"):
            a = zolotarev_a(w, alpha, reflected=True)
        return integrand(a)

    v1, e1 = integrate_finite(near_zero, 0.0, 0.5 * np.pi, quad)
    v2, e2 = integrate_finite(near_pi, 0.0, 0.5 * np.pi, quad)
    with np.errstate(under="ignore"):
        pref = np.exp(log_pref[live])
    value[live] = pref * (v1 + v2)
    err[live] = pref * (e1 + e2) + 4.0 * _EPS * value[live]
    return value, err


def _pollard_integral_unit(alpha, logx, log_scale, quad):
    x = np.exp(logx)
    v, e = hankel_inversion(lambda log_s: -np.exp(alpha * log_s), x, quad)
    scale = np.exp(log_scale)
    return v * scale, e * scale


def _unit_scaled(alpha, logx, log_scale, method, quad):
    """Dispatch on flat arrays: scale * f_alpha(x | 1), with x = exp(logx)."""
    value = np.zeros_like(logx)
    err = np.zeros_like(logx)
    labels = np.empty(logx.shape, dtype=object)
    log_scale = np.broadcast_to(log_scale, logx.shape)
    if method is StableMethod.AUTO:
        use_series = alpha * logx >= math.log(SERIES_THRESHOLD)
        chosen = np.where(use_series, StableMethod.POLLARD_SERIES, StableMethod.ZOLOTAREV)
    else:
        chosen = np.full(logx.shape, method, dtype=object)
    for m in (StableMethod.POLLARD_SERIES, StableMethod.ZOLOTAREV, StableMethod.POLLARD_INTEGRAL):
        sel = chosen == m
        if not np.any(sel):
            continue
        lx, ls = logx[sel], log_scale[sel]
        if m is StableMethod.POLLARD_SERIES:
            v, e, ok = _series_unit(alpha, lx, ls)
            if not np.all(ok):
                raise SeriesError(
                    f"stable series did not converge in {SERIES_TERMS} terms "
                    f"at t*lam^(-1/alpha) = {np.exp(lx[~ok].min()):.6g}"
                )
        elif m is StableMethod.ZOLOTAREV:
            v, e = _zolotarev_unit(alpha, lx, ls, quad)
        else:
            v, e = _pollard_integral_unit(alpha, lx, ls, quad)
        value[sel] = v
        err[sel] = e
        labels[sel] = m.value
    return value, err, labels


def _closed_form_half(lam, t):
    with np.errstate(under="ignore"):
        # in logs so that t**-1.5 cannot overflow against the vanishing exponential
        return np.exp(math.log(lam / (2.0 * math.sqrt(math.pi))) - 1.5 * np.log(t) - lam**2 / (4.0 * t))


def stable_density(
    spec: StableSpec,
    t,
    method: StableMethod = StableMethod.AUTO,
    quad: QuadratureSpec = DEFAULT_QUAD,
    full_output: bool = False,
):
    """Density f_alpha(t | lam) of the one-sided stable law.

    The scale is removed first, f(t|lam) = lam^(-1/alpha) f(t lam^(-1/alpha) | 1).
    AUTO uses the Pollard series where t**alpha / lam >= 1.5 and the
    Zolotarev integral elsewhere; both are free of cancellation there.
    With ``full_output`` returns (value, error estimate, method labels).
    """
    method = StableMethod(method)
    alpha, lam = spec.alpha, spec.lam
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise ValueError("stable_density is defined for t > 0")
    shape = t.shape
    t = t.ravel()
    if method is StableMethod.CLOSED_FORM_HALF:
        if alpha != 0.5:
            raise MethodDomainError("the closed form is only available for alpha = 1/2")
        value = _closed_form_half(lam, t)
        err = 4.0 * _EPS * value
        labels = np.full(t.shape, method.value, dtype=object)
    else:
        log_scale = -math.log(lam) / alpha
        value, err, labels = _unit_scaled(alpha, np.log(t) + log_scale, log_scale, method, quad)

    value = value.reshape(shape)
    if full_output:
        return value, err.reshape(shape), labels.reshape(shape)
    return value[()] if value.ndim == 0 else value


def stable_density_lam(alpha: float, t, lam, quad: QuadratureSpec = DEFAULT_QUAD):
    """f_alpha(t | lam) with t and lam broadcast against each other.

    Works in log scale so that extreme lam (as met inside mixture integrals)
    neither overflows nor produces nan; t = 0 or lam = inf give 0.
    """
    t, lam = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lam, dtype=float))
    shape = t.shape
    with np.errstate(divide="ignore"):
        log_scale = -np.log(lam.ravel()) / alpha
        logx = np.log(t.ravel()) + log_scale
    value = np.zeros(logx.shape)
    ok = np.isfinite(logx) & np.isfinite(log_scale)
    if np.any(ok):
        value[ok], _, _ = _unit_scaled(alpha, logx[ok], log_scale[ok], StableMethod.AUTO, quad)
    return value.reshape(shape)


def stable_series_truncated(spec: StableSpec, t, n_terms: int):
    """Partial sum of the Pollard series with ``n_terms`` terms (k = 1..n_terms)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if n_terms <= 0:
        return np.zeros_like(t)
    log_scale = -math.log(spec.lam) / spec.alpha
    v, _, _ = _series_unit(spec.alpha, np.log(t) + log_scale, log_scale, terms=n_terms)
    return v


def stable_sample(spec: StableSpec, n: int, rng) -> np.ndarray:
    """Exact draws by the Kanter / Chambers-Mallows-Stuck construction.

    S = (A(U) / E)^((1-alpha)/alpha) with U uniform on (0, pi) and E standard
    exponential has Laplace transform exp(-x**alpha); scaling by
    lam^(1/alpha) gives the general case.
    """
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    gen = as_generator(rng)
    alpha = spec.alpha
    u = gen.uniform(0.0, np.pi, size=n)
    e = gen.standard_exponential(size=n)
    a = zolotarev_a(u, alpha)
    return spec.lam ** (1.0 / alpha) * (a / e) ** ((1.0 - alpha) / alpha)


def tilting_residual(spec: StableSpec, t, quad: QuadratureSpec = DEFAULT_QUAD):
    """t f(t|lam) - lam alpha {rho_(1-alpha) * f(.|lam)}(t), convolution by quadrature."""
    t = np.asarray(t, dtype=float)
    lhs = t * stable_density(spec, t, quad=quad)
    conv, _ = convolve_power(1.0 - spec.alpha, lambda s: stable_density(spec, s, quad=quad), t, quad)
    return lhs - spec.lam * spec.alpha * conv
