"""Stable mixtures w(t) = int f_sigma(t | lam u) dP(u) over an ML(alpha, beta, gamma, theta) law.

The Laplace transform of w is the composition
Gamma(beta+theta) E^{gamma+theta/alpha}_{alpha,beta+theta}(-lam x^sigma).
Also here: the closed sigma = alpha density for P_alpha and the signed
q-kernels whose transforms are t^(beta+theta-1) E^{...}(-y t^alpha).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .mldist import MLParams, ml_density, ml_log_moment
from .mlfunc import PrabhakarParams, _series, mittag_leffler
from .numkernel import (
    DEFAULT_QUAD,
    MethodDomainError,
    QuadratureSpec,
    SeriesError,
    cospi,
    integrate_halfline,
    sinpi,
)
from .stable import stable_density_lam

MOMENT_SERIES_GATE = 2.0  # moment series only where t^sigma / lam >= this
MOMENT_SERIES_TERMS = 300
_EPS = np.finfo(float).eps
_AUTO_REL_TOL = 1e-10


@dataclass(frozen=True)
class MixtureSpec:
    sigma: float
    lam: float
    ml: MLParams

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie in (0, 1), got {self.sigma}")
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive, got {self.lam}")

    @property
    def transform_params(self) -> PrabhakarParams:
        p = self.ml
        return PrabhakarParams(p.alpha, p.beta + p.theta, p.shape)

    @property
    def is_lamperti(self) -> bool:
        p = self.ml
        return self.sigma == p.alpha and (p.beta, p.gamma_, p.theta) == (1.0, 1.0, 0.0)


@dataclass(frozen=True)
class QKernelParams:
    ml: MLParams
    y: float

    def __post_init__(self):
        if not (self.y > 0.0 and math.isfinite(self.y)):
            raise ValueError(f"y must be positive, got {self.y}")


class MixtureMethod(enum.Enum):
    MOMENT_SERIES = "moment-series"
    IM_INTEGRAL = "im-integral"
    MIX_QUADRATURE = "mix-quadrature"
    CLOSED_FORM_LAMPERTI = "closed-form-lamperti"
    AUTO = "auto"


def lamperti_density(alpha: float, lam: float, t):
    """(sin pi a / pi) lam t^(a-1) / (lam^2 + 2 lam t^a cos pi a + t^(2a))."""
    t = np.asarray(t, dtype=float)
    ta = t**alpha
    with np.errstate(over="ignore"):  # den -> inf gives the correct 0 tail
        den = lam * lam + 2.0 * lam * ta * math.cos(math.pi * alpha) + ta * ta
    return math.sin(math.pi * alpha) / math.pi * lam * ta / t / den


def mixture_laplace(spec: MixtureSpec, x):
    """Gamma(beta+theta) E^{gamma+theta/alpha}_{alpha,beta+theta}(-lam x^sigma)."""
    p = spec.ml
    x = np.asarray(x, dtype=float)
    return math.gamma(p.beta + p.theta) * mittag_leffler(spec.transform_params, spec.lam * x**spec.sigma)


def _moment_terms(spec: MixtureSpec, t, n_terms, with_envelope=False):
    """k-th terms -(1/pi)(-lam)^k sin(pi sigma k) M_k / k! Gamma(sigma k + 1) t^(-sigma k - 1).

    With ``with_envelope`` also returns the magnitudes without the sine factor.
    """
    s = spec.sigma
    k = np.arange(n_terms, dtype=float)[:, None]
    logt = np.log(t)[None, :]
    log_mag = (
        ml_log_moment(spec.ml, k)
        - special.gammaln(k + 1.0)
        + special.gammaln(s * k + 1.0)
        + k * math.log(spec.lam)
        - (s * k + 1.0) * logt
    )
    sgn = -np.where(k % 2 == 0, 1.0, -1.0) * sinpi(s * k)
    with np.errstate(under="ignore"):
        env = np.exp(log_mag) / np.pi
    if with_envelope:
        return sgn * env, env
    return sgn * env


def mixture_series_truncated(spec: MixtureSpec, t, k_max: int):
    """Partial sum k = 0..k_max of the moment series (the k = 0 term is 0)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if k_max < 0:
        return np.zeros_like(t)
    return _moment_terms(spec, t, k_max + 1).sum(axis=0)


def _moment_series(spec: MixtureSpec, t):
    """Sum to just before the smallest term; that term is the error estimate.

    The series converges for sigma < alpha and is asymptotic for sigma > alpha.
    The stopping index comes from the envelope, since sin(pi sigma k) has
    isolated exact zeros.
    """
    terms, env = _moment_terms(spec, t, MOMENT_SERIES_TERMS, with_envelope=True)
    env[0] = np.inf  # the k = 0 term vanishes identically
    smallest = np.argmin(env, axis=0)
    keep = np.arange(terms.shape[0])[:, None] < smallest[None, :]
    keep[0] = False
    value = np.where(keep, terms, 0.0).sum(axis=0)
    err = env[smallest, np.arange(t.size)] + 4.0 * _EPS * np.where(keep, np.abs(terms), 0.0).sum(axis=0)
    return value, err


def _im_integral(spec: MixtureSpec, t, quad):
    """(Gamma(beta+theta)/pi) Im int e^{-tu} E(-lam e^{-i pi sigma} u^sigma) du.

    The transform is summed by its power series at complex argument, so this
    route only works where e^{-tu} beats the series growth: sigma < alpha,
    or sigma = alpha with t large enough. Raises SeriesError elsewhere.
    """
    s, lam = spec.sigma, spec.lam
    tp = spec.transform_params
    if s > tp.alpha:
        raise MethodDomainError("the Im-integral form needs sigma <= alpha")
    tc = t[:, None]
    rot = np.exp(-1j * np.pi * s)
    pref = math.gamma(spec.ml.beta + spec.ml.theta) / np.pi

    def integrand(u):
        decay = -tc * u
        live = decay > -745.0
        cols = np.flatnonzero(np.any(live, axis=0))
        out = np.zeros((2,) + decay.shape)
        if cols.size:
            z = -lam * rot * u[cols] ** s
            v, abs_sum, ok = _series(tp, z)
            if not np.all(ok):
                raise SeriesError("composition series diverged inside the Im-integral")
            with np.errstate(under="ignore"):
                env = np.exp(decay[:, cols])
            out[0][:, cols] = np.where(live[:, cols], env * v.imag, 0.0)
            out[1][:, cols] = np.where(live[:, cols], env * abs_sum, 0.0)
        return out

    res, err = integrate_halfline(integrand, 0.0, quad)
    return pref * res[0], pref * (err[0] + 4.0 * _EPS * res[1])


def _mix_quadrature(mixing: Callable, sigma, lam, t, quad):
    # f_sigma(t | lam u) is concentrated around u ~ t^sigma / lam; rescaling
    # u = c v puts that peak where the exp-sinh nodes are dense
    c = (t**sigma / lam)[:, None]

    def integrand(v):
        with np.errstate(over="ignore", under="ignore"):
            u = c * v
        live = (u > 0.0) & np.isfinite(u)  # the others carry no mass
        w = np.zeros(u.shape)
        if np.any(live):
            w[live] = mixing(u[live])
        dens = stable_density_lam(sigma, t[:, None], lam * u, quad)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(w == 0.0, 0.0, dens * w * c)

    return integrate_halfline(integrand, 0.0, quad)


def mixture_density(
    spec: MixtureSpec,
    t,
    method: MixtureMethod = MixtureMethod.AUTO,
    quad: QuadratureSpec = DEFAULT_QUAD,
    full_output: bool = False,
):
    """Mixture density w_{sigma,alpha}(t | lam, ...) for t > 0.

    AUTO: the closed form when it applies; otherwise the moment series where
    t^sigma / lam >= 2 and its smallest-term error is below 1e-10 relative,
    and the mixture quadrature (positive integrand) elsewhere.
    """
    method = MixtureMethod(method)
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise ValueError("mixture_density is defined for t > 0")
    shape = t.shape
    flat = t.ravel()
    value = np.zeros_like(flat)
    err = np.zeros_like(flat)
    labels = np.empty(flat.shape, dtype=object)

    if method is MixtureMethod.CLOSED_FORM_LAMPERTI or (method is MixtureMethod.AUTO and spec.is_lamperti):
        if not spec.is_lamperti:
            raise MethodDomainError("the closed form needs sigma = alpha and ml = (alpha, 1, 1, 0)")
        value = lamperti_density(spec.sigma, spec.lam, flat)
        err = 8.0 * _EPS * value
        labels[:] = MixtureMethod.CLOSED_FORM_LAMPERTI.value
    elif method is MixtureMethod.MOMENT_SERIES:
        if np.any(flat**spec.sigma / spec.lam < MOMENT_SERIES_GATE):
            raise SeriesError("the moment series is a large-t expansion; needs t^sigma / lam >= 2")
        value, err = _moment_series(spec, flat)
        labels[:] = method.value
    elif method is MixtureMethod.IM_INTEGRAL:
        value, err = _im_integral(spec, flat, quad)
        labels[:] = method.value
    else:
        rest = np.ones(flat.shape, dtype=bool)
        if method is MixtureMethod.AUTO:
            gate = flat**spec.sigma / spec.lam >= MOMENT_SERIES_GATE
            if np.any(gate):
                v, e = _moment_series(spec, flat[gate])
                good = e <= _AUTO_REL_TOL * np.abs(v)
                idx = np.flatnonzero(gate)[good]
                value[idx], err[idx] = v[good], e[good]
                labels[idx] = MixtureMethod.MOMENT_SERIES.value
                rest[idx] = False
        if np.any(rest):
            v, e = _mix_quadrature(lambda u: ml_density(spec.ml, u, quad=quad), spec.sigma, spec.lam, flat[rest], quad)
            value[rest], err[rest] = v, e
            labels[rest] = MixtureMethod.MIX_QUADRATURE.value

    value = np.asarray(value).reshape(shape)
    if full_output:
        return value, np.asarray(err).reshape(shape), labels.reshape(shape)
    return value[()] if value.ndim == 0 else value


def generic_mixture_density(
    sigma: float,
    lam: float,
    mixing_density: Callable,
    t,
    quad: QuadratureSpec = DEFAULT_QUAD,
):
    """int_0^inf f_sigma(t | lam u) mixing_density(u) du for any mixing density.

    ``mixing_density`` takes an array of u > 0 and must return 0 where it
    underflows.
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    if not lam > 0.0:
        raise ValueError("lambda must be positive")
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0.0)):
        raise ValueError("generic_mixture_density is defined for t > 0")
    v, _ = _mix_quadrature(mixing_density, sigma, lam, t.ravel(), quad)
    v = v.reshape(t.shape)
    return v[()] if v.ndim == 0 else v


def is_nonneg_regime(ml: MLParams) -> bool:
    """The q-kernel is a true (nonnegative) density only when beta + theta <= 1."""
    return ml.beta + ml.theta <= 1.0


def q_kernel(qp: QKernelParams, u):
    """(1/pi) Im{(e^{-i pi} u)^(alpha gamma - beta) / (y + e^{-i pi alpha} u^alpha)^(gamma + theta/alpha)}.

    Signed in general; see ``is_nonneg_regime``. Its Laplace transform is
    ``q_kernel_laplace`` minus ``q_kernel_atom`` (nonzero only when
    beta - alpha gamma = 1).
    """
    p = qp.ml
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)):
        raise ValueError("q_kernel is defined for u > 0")
    e = p.alpha * p.gamma_ - p.beta
    log_den = p.shape * np.log(qp.y + np.exp(p.alpha * (np.log(u) - 1j * np.pi)))
    # Im exp(e (ln u - i pi) - log_den); the phase -pi e is applied with exact
    # sinpi/cospi, otherwise Im loses all accuracy when e is an integer
    phi = log_den.imag
    with np.errstate(under="ignore", over="ignore"):
        mag = np.exp(e * np.log(u) - log_den.real)
    out = mag * (sinpi(-e) * np.cos(phi) - cospi(-e) * np.sin(phi)) / np.pi
    return out[()] if out.ndim == 0 else out


def q_kernel_atom(qp: QKernelParams) -> float:
    """Mass at u = 0 that completes the kernel's transform identity.

    With G(s) = s^(alpha gamma - beta) / (s^alpha + y)^(gamma + theta/alpha)
    the inversion contour picks up lim s G(s) at the origin: 0 when
    beta - alpha gamma < 1 and y^-(gamma + theta/alpha) when it equals 1.
    Beyond that the kernel is not integrable at 0.
    """
    p = qp.ml
    e = p.beta - p.alpha * p.gamma_
    if e < 1.0:
        return 0.0
    if e == 1.0:
        return qp.y ** (-p.shape)
    raise MethodDomainError("the q-kernel is not integrable at 0 when beta - alpha*gamma > 1")


def q_kernel_laplace(qp: QKernelParams, t):
    """t^(beta+theta-1) E^{gamma+theta/alpha}_{alpha,beta+theta}(-y t^alpha)."""
    p = qp.ml
    t = np.asarray(t, dtype=float)
    tp = PrabhakarParams(p.alpha, p.beta + p.theta, p.shape)
    return t ** (p.beta + p.theta - 1.0) * mittag_leffler(tp, qp.y * t**p.alpha)
