"""Mittag-Leffler (Prabhakar) functions on the negative real axis and Kummer's M."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .numkernel import DEFAULT_QUAD, QuadratureError, QuadratureSpec, SeriesError, hankel_inversion

X_SWITCH = 5.0
SERIES_TERMS = 600
# the series is abandoned when its roundoff bound exceeds this relative error
_SERIES_REL_TOL = 1e-12
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PrabhakarParams:
    alpha: float
    beta: float = 1.0
    gamma_: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.gamma_ > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma_}")


def _log_coefficients(p: PrabhakarParams, n_terms: int):
    k = np.arange(n_terms, dtype=float)
    return (
        special.gammaln(p.gamma_ + k)
        - special.gammaln(p.gamma_)
        - special.gammaln(k + 1.0)
        - special.gammaln(p.alpha * k + p.beta)
    )


def _series(p: PrabhakarParams, z, n_terms=SERIES_TERMS):
    """Sum_k c_k z^k for real or complex z, with sum_k |c_k z^k|.

    Terms are accumulated from the smallest up (reverse order) which is the
    descending-magnitude order for the tail; the running sum is compensated.
    Returns (value, absolute-term sum, converged mask).
    """
    z = np.asarray(z)
    log_c = _log_coefficients(p, n_terms)[:, None]
    flat = z.ravel()
    with np.errstate(divide="ignore"):
        log_abs_z = np.log(np.abs(flat))[None, :]
    k = np.arange(n_terms, dtype=float)[:, None]
    with np.errstate(invalid="ignore"):
        log_mag = log_c + np.where(k == 0, 0.0, k * log_abs_z)
    with np.errstate(over="ignore", under="ignore"):
        mag = np.exp(log_mag)
    if np.iscomplexobj(flat):
        phase = np.exp(1j * k * np.angle(flat)[None, :])
    else:
        phase = np.where(flat[None, :] < 0.0, np.where(k % 2 == 0, 1.0, -1.0), 1.0)
    terms = mag * phase
    value = _compensated(terms[::-1])
    abs_sum = mag.sum(axis=0)
    tail = mag[-1]
    converged = np.isfinite(abs_sum) & (tail <= _EPS * np.maximum(np.abs(value), 1e-300))
    return value.reshape(z.shape), abs_sum.reshape(z.shape), converged.reshape(z.shape)


def _compensated(terms):
    """Neumaier summation over axis 0; complex parts handled separately."""
    if np.iscomplexobj(terms):
        return _compensated(terms.real) + 1j * _compensated(terms.imag)
    total = np.zeros(terms.shape[1:])
    comp = np.zeros_like(total)
    for term in terms:
        s = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - s) + term, (term - s) + total)
        total = s
    return total + comp


def prabhakar_series_complex(p: PrabhakarParams, z):
    """E^gamma_{alpha,beta}(z) at complex z by the power series.

    Returns (value, sum of |terms|); the second is a roundoff scale for
    callers that take small imaginary parts of large values.
    """
    value, abs_sum, ok = _series(p, np.asarray(z, dtype=complex))
    if not np.all(ok):
        raise SeriesError("Prabhakar series did not converge; argument too large")
    return value, abs_sum


def _hankel_route(p: PrabhakarParams, x, quad):
    """E^gamma_{alpha,beta}(-x) as the inverse Laplace transform at t = 1.

    The transform s^(alpha gamma - beta) / (s^alpha + x)^gamma has its cut on
    the negative axis; when beta - alpha gamma < 1 the ray integrand (the
    q-kernel) is integrable at 0; the contour is kept at distance 1 from the
    origin unless that exponent is comfortably below 1.
    """
    a, b, g = p.alpha, p.beta, p.gamma_
    xc = np.asarray(x, dtype=float)[:, None]

    def log_g(log_s):
        return (a * g - b) * log_s - g * np.log(np.exp(a * log_s) + xc)

    t = np.ones(xc.shape[0])
    # near beta - alpha gamma = 1 the ray integrand is barely integrable at 0,
    # so the detour around the origin is preferred well before that
    if b - a * g < 0.5:
        try:
            return hankel_inversion(log_g, t, quad, radius=0.0)
        except QuadratureError:
            pass
    return hankel_inversion(log_g, t, quad, radius=1.0)


def kummer_m(a: float, b: float, x):
    """Confluent hypergeometric M(a, b, x) for b > a > 0.

    Negative arguments use Kummer's transformation
    M(a, b, x) = e^x M(b - a, b, -x) so the summed series has positive
    terms only.
    """
    if not (a > 0.0 and b > a):
        raise ValueError(f"kummer_m requires b > a > 0, got a={a}, b={b}")
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    neg = flat < 0.0
    out = np.empty_like(flat)
    if np.any(~neg):
        out[~neg] = _kummer_positive(a, b, flat[~neg])
    if np.any(neg):
        xn = -flat[neg]
        out[neg] = np.exp(-xn) * _kummer_positive(b - a, b, xn)
    out = out.reshape(x.shape)
    return out[()] if out.ndim == 0 else out


def _kummer_positive(a, b, x):
    """Series for x >= 0 when a >= 0 and b > 0 (all terms nonnegative)."""
    n_terms = int(max(60, 2 * np.max(x, initial=0.0) + 20 * math.sqrt(np.max(x, initial=0.0)) + 60))
    k = np.arange(n_terms, dtype=float)[:, None]
    with np.errstate(divide="ignore"):
        logx = np.log(x)[None, :]
    log_mag = (
        special.gammaln(a + k)
        - special.gammaln(a)
        + special.gammaln(b)
        - special.gammaln(b + k)
        - special.gammaln(k + 1.0)
        + np.where(k == 0, 0.0, k * np.where(np.isfinite(logx), logx, 0.0))
    )
    log_mag = np.where((k > 0) & ~np.isfinite(logx), -np.inf, log_mag)
    if a == 0.0:
        log_mag = np.where(k == 0, 0.0, -np.inf)
    with np.errstate(under="ignore"):
        return np.exp(log_mag).sum(axis=0)


def mittag_leffler(
    p: PrabhakarParams,
    x,
    quad: QuadratureSpec = DEFAULT_QUAD,
    full_output: bool = False,
):
    """E^gamma_{alpha,beta}(-x) for x >= 0.

    The power series is used for x <= 5 as long as its cancellation stays
    below roundoff tolerance; otherwise the contour-integral route takes
    over. For alpha = 1 the large-x path is Kummer's transformation
    E^gamma_{1,beta}(-x) = e^{-x} M(beta - gamma, beta, x) / Gamma(beta)
    when beta >= gamma.
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0)):
        raise ValueError("mittag_leffler evaluates E(-x) for x >= 0")
    shape = x.shape
    flat = x.ravel()
    value = np.zeros_like(flat)
    err = np.zeros_like(flat)
    labels = np.empty(flat.shape, dtype=object)

    sel = flat <= X_SWITCH
    if np.any(sel):
        v, abs_sum, ok = _series(p, -flat[sel])
        bound = 4.0 * _EPS * abs_sum
        good = ok & (bound <= _SERIES_REL_TOL * np.abs(v))
        idx = np.flatnonzero(sel)
        value[idx[good]] = v[good]
        err[idx[good]] = bound[good]
        labels[idx[good]] = "series"
        sel[idx[~good]] = False
    rest = ~sel
    if np.any(rest):
        xr = flat[rest]
        if p.alpha == 1.0 and p.beta >= p.gamma_:
            v = np.exp(-xr) * _kummer_positive(p.beta - p.gamma_, p.beta, xr) / math.gamma(p.beta)
            e = 8.0 * _EPS * np.abs(v)
            label = "kummer"
        elif p.alpha == 1.0:
            raise SeriesError("alpha = 1 with beta < gamma needs the series; argument too large")
        else:
            v, e = _hankel_route(p, xr, quad)
            label = "contour"
        value[rest] = v
        err[rest] = e
        labels[rest] = label

    value = value.reshape(shape)
    if full_output:
        return value, err.reshape(shape), labels.reshape(shape)
    return value[()] if value.ndim == 0 else value
