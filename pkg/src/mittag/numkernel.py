"""Shared numerical primitives.

Gamma-family helpers, the beta and power densities, and a vectorised
double-exponential quadrature used by every integral representation in the
package. Integrands are called with a 1-d array of nodes and may return an
array whose last axis runs over those nodes, so a whole batch of integrals
(one per leading index) is computed with a single set of evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special


_TAU_MAX_FINITE = 6.0  # tanh-sinh offsets reach ~1e-275 from the endpoints
_TAU_MAX_HALFLINE = 6.5  # exp-sinh nodes span roughly [1e-280, 1e280]
_START_STEP = 0.5
_MIN_STEP_CHECK = 0.125  # never accept a result from a coarser step


class QuadratureError(RuntimeError):
    """Raised when a quadrature fails to converge within its node budget."""


class SeriesError(RuntimeError):
    """Raised when a series does not converge within its term budget."""


class MethodDomainError(ValueError):
    """Raised when an evaluation method is used outside its validity domain."""


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-11
    abs_tol: float = 1e-15
    max_nodes: int = 6000
    # semi-infinite integrals with an e^{-r u} envelope are cut where
    # e^{-r u} < abs_tol * tail_factor
    tail_factor: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 0.0 < self.abs_tol < 1.0:
            raise ValueError("abs_tol must lie in (0, 1)")
        if self.max_nodes < 15:
            raise ValueError("max_nodes must be at least 15")
        if not 0.0 < self.tail_factor <= 1.0:
            raise ValueError("tail_factor must lie in (0, 1]")

    def cutoff(self, rate: float) -> float:
        """Point beyond which an e^{-rate*u} envelope is negligible."""
        return -math.log(self.abs_tol * self.tail_factor) / rate


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class PowerExponent:
    nu: float

    def __post_init__(self):
        if not (self.nu >= 0.0 and math.isfinite(self.nu)):
            raise ValueError(f"power exponent must be finite and >= 0, got {self.nu}")


@dataclass(frozen=True)
class RngSpec:
    """Seed plus bit-generator name; identical specs give identical streams."""

    seed: int
    algorithm: str = "PCG64"

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not hasattr(np.random, self.algorithm):
            raise ValueError(f"unknown bit generator {self.algorithm!r}")

    def generator(self) -> np.random.Generator:
        return np.random.Generator(getattr(np.random, self.algorithm)(self.seed))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an RngSpec or an integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngSpec):
        return rng.generator()
    return RngSpec(int(rng)).generator()


# ---------------------------------------------------------------------------
# gamma family


def sinpi(x):
    """sin(pi*x) with exact zeros at the integers."""
    x = np.asarray(x, dtype=float)
    n = np.round(x)
    r = x - n
    sign = np.where(np.fmod(n, 2.0) == 0.0, 1.0, -1.0)
    return sign * np.sin(np.pi * r)


def cospi(x):
    """cos(pi*x) with exact zeros at the half-integers."""
    return sinpi(np.asarray(x, dtype=float) + 0.5)


def lgamma_abs(x):
    """log|Gamma(x)| for real x (inf at the poles)."""
    return special.gammaln(x)


def recip_gamma(x):
    """1/Gamma(x) for any real x, exactly 0 at the nonpositive integers.

    Uses the reflection formula 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi for
    x < 0.5 so that large negative arguments neither overflow nor lose the
    sign pattern.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    left = x < 0.5
    xr = x[~left]
    out[~left] = np.exp(-special.gammaln(xr)) if xr.size else xr
    xl = x[left]
    if xl.size:
        out[left] = sinpi(xl) * np.exp(special.gammaln(1.0 - xl)) / np.pi
    return out[()] if out.ndim == 0 else out


def log_recip_gamma(x):
    """(log|1/Gamma(x)|, sign) with log = -inf and sign 0 at the poles."""
    x = np.asarray(x, dtype=float)
    s = np.where(x < 0.5, sinpi(x), 1.0)
    with np.errstate(divide="ignore"):
        mag = np.where(
            x < 0.5,
            special.gammaln(1.0 - x) + np.log(np.abs(s)) - math.log(math.pi),
            -special.gammaln(x),
        )
    return mag, np.sign(s)


def power_density(nu, t):
    """rho_nu(t) = t^(nu-1) / Gamma(nu) for nu > 0, t > 0."""
    nu_val = nu.nu if isinstance(nu, PowerExponent) else float(nu)
    if nu_val <= 0.0:
        raise ValueError("power_density needs nu > 0; the nu = 0 case is a point mass")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("power_density is defined for t > 0")
    return np.exp((nu_val - 1.0) * np.log(t) - special.gammaln(nu_val))


def beta_density(a: float, b: float, u):
    if a <= 0.0 or b <= 0.0:
        raise ValueError("beta parameters must be positive")
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise ValueError("beta_density is defined on the open interval (0, 1)")
    log_norm = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)
    return np.exp(log_norm + (a - 1.0) * np.log(u) + (b - 1.0) * np.log1p(-u))


def neumaier_sum(terms, axis=0):
    """Compensated sum along ``axis`` (vectorised Neumaier variant of Kahan)."""
    terms = np.moveaxis(np.asarray(terms), axis, 0)
    total = np.zeros(terms.shape[1:], dtype=terms.dtype)
    comp = np.zeros_like(total)
    for term in terms:
        s = total + term
        big = np.abs(total) >= np.abs(term)
        comp = comp + np.where(big, (total - s) + term, (term - s) + total)
        total = s
    return total + comp


# ---------------------------------------------------------------------------
# double-exponential quadrature


def _finite_nodes(tau, a, b):
    """tanh-sinh nodes and Jacobians on (a, b), accurate near both ends."""
    s = 0.5 * np.pi * np.sinh(tau)
    e = np.exp(-2.0 * np.abs(s))
    frac = e / (1.0 + e)  # distance to the nearest endpoint over (b - a)
    width = b - a
    x = np.where(tau < 0.0, a + width * frac, b - width * frac)
    jac = width * np.pi * np.cosh(tau) * e / (1.0 + e) ** 2
    # offsets rounded onto an endpoint carry negligible weight; never evaluate there
    jac = np.where((x > a) & (x < b), jac, 0.0)
    return x, jac


def _halfline_nodes(tau, a):
    s = 0.5 * np.pi * np.sinh(tau)
    ex = np.exp(s)
    return a + ex, ex * 0.5 * np.pi * np.cosh(tau)


def _de_integrate(f, nodes, tau_max, quad, interval_label):
    """Trapezoidal rule in tau with step halving until converged."""

    def weighted_sum(tau):
        x, jac = nodes(tau)
        keep = jac > 0.0
        fx = np.asarray(f(x[keep]), dtype=float)
        part = np.sum(fx * jac[keep], axis=-1)
        if not np.all(np.isfinite(part)):
            raise QuadratureError(f"non-finite integrand values on {interval_label}")
        return part

    h = _START_STEP
    n_half = int(round(tau_max / h))
    raw = weighted_sum(np.arange(-n_half, n_half + 1) * h)
    used = 2 * n_half + 1
    total = raw * h
    err = np.full(np.shape(total), np.inf)
    while True:
        h *= 0.5
        n_half = int(round(tau_max / h))
        used += n_half
        if used > quad.max_nodes:
            raise QuadratureError(
                f"quadrature on {interval_label} did not converge within "
                f"{quad.max_nodes} nodes (last change {np.max(err):.3e})"
            )
        k = np.arange(-n_half + 1, n_half, 2)
        raw = raw + weighted_sum(k * h)
        new_total = raw * h
        err = np.abs(new_total - total)
        total = new_total
        if h <= _MIN_STEP_CHECK and np.all(
            err <= np.maximum(quad.abs_tol, quad.rel_tol * np.abs(total))
        ):
            return total, err


def integrate_finite(f: Callable, a: float, b: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """Integrate f over (a, b); f is never evaluated at the endpoints.

    Nodes crowd doubly-exponentially towards both ends, so algebraic endpoint
    singularities are handled. Place singular endpoints at 0 where possible:
    offsets near a nonzero endpoint are rounded away.
    Returns (value, error estimate).
    """
    if not b > a:
        raise ValueError("integration interval must satisfy a < b")
    return _de_integrate(
        f, lambda tau: _finite_nodes(tau, a, b), _TAU_MAX_FINITE, quad, f"({a}, {b})"
    )


def integrate_halfline(f: Callable, a: float = 0.0, quad: QuadratureSpec = DEFAULT_QUAD):
    """Integrate f over (a, inf) with the exp-sinh transform.

    Suitable for algebraically or exponentially decaying integrands. The
    integrand may be asked for values at very large and very small offsets
    and must return 0 (not nan) where it underflows.
    """
    return _de_integrate(
        f, lambda tau: _halfline_nodes(tau, a), _TAU_MAX_HALFLINE, quad, f"({a}, inf)"
    )


def integrate_semiinf(f: Callable, quad: QuadratureSpec = DEFAULT_QUAD, decay: float | None = None):
    """Integrate f over (0, inf).

    With ``decay`` given the integrand is assumed to be bounded by a modest
    multiple of e^{-decay*u}; the range is then truncated where that envelope
    drops below abs_tol * tail_factor and the remainder handled by tanh-sinh.
    Without it the exp-sinh map is used.
    """
    if decay is None:
        return integrate_halfline(f, 0.0, quad)
    if decay <= 0.0:
        raise ValueError("decay rate must be positive")
    return integrate_finite(f, 0.0, quad.cutoff(decay), quad)


def convolve_power(nu: float, f: Callable, t, quad: QuadratureSpec = DEFAULT_QUAD):
    """{rho_nu * f}(t) = int_0^t rho_nu(r) f(t - r) dr by direct quadrature.

    ``f`` takes an array of positive points. The interval is split in half so
    that both the power singularity at r = 0 and the behaviour of f near 0
    sit at a node-clustering endpoint with full relative resolution.
    """
    if nu <= 0.0:
        raise ValueError("convolve_power needs nu > 0")
    t = np.asarray(t, dtype=float)
    tt = t.reshape(-1, 1)
    log_norm = special.gammaln(nu)

    def near_power(v):  # r = t v, v in (0, 1/2)
        r = tt * v
        return np.exp((nu - 1.0) * np.log(r) - log_norm) * f(tt - r) * tt

    def near_f(w):  # t - r = t w, w in (0, 1/2)
        s = tt * w
        return np.exp((nu - 1.0) * np.log(tt - s) - log_norm) * f(s) * tt

    v1, e1 = integrate_finite(near_power, 0.0, 0.5, quad)
    v2, e2 = integrate_finite(near_f, 0.0, 0.5, quad)
    return (v1 + v2).reshape(t.shape), (e1 + e2).reshape(t.shape)


def hankel_inversion(
    log_g: Callable, t, quad: QuadratureSpec = DEFAULT_QUAD, radius=0.0, with_magnitude: bool = False
):
    """Inverse Laplace transform on a Hankel contour around the negative axis.

    ``log_g(log_s)`` returns log G(s) given the principal complex log of s;
    G must be analytic off (-inf, 0] with conjugate symmetry. The result is

        (1/pi) int_radius^inf e^{-tu} Im G(u e^{-i pi}) du
        + (1/pi) int_0^pi Re[e^{ts} G(s) s] d(phi),   s = radius e^{i phi}.

    radius = 0 needs G(u e^{-i pi}) integrable at u = 0. ``radius`` may be an
    array broadcast against ``t``; leading axes of the ``log_g`` output
    broadcast against ``t`` as well.
    Returns (value, error estimate), plus the integral of the integrand's
    envelope (a roundoff scale for the value) when ``with_magnitude``.
    """
    t = np.asarray(t, dtype=float)
    radius = np.broadcast_to(np.asarray(radius, dtype=float), t.shape)
    if np.any(radius < 0.0):
        raise ValueError("contour radius must be nonnegative")
    tcol = t[..., None]
    rcol = radius[..., None]

    def with_abs(amp, osc):
        # the smooth envelope amp >= |amp * osc| converges as fast as the value
        return np.stack([amp * osc, amp]) if with_magnitude else amp * osc

    def ray(v):
        u = rcol + v
        expo = -tcol * u + log_g(np.log(u) - 1j * np.pi)
        with np.errstate(under="ignore"):
            return with_abs(np.exp(expo.real) / np.pi, np.sin(expo.imag))

    value, err = integrate_halfline(ray, 0.0, quad)
    circ = radius > 0.0
    if np.any(circ):
        if not np.all(circ):
            raise ValueError("contour radius must be all zero or all positive")

        def circle(phi):
            log_s = np.log(rcol) + 1j * phi
            s = np.exp(log_s)
            expo = tcol * s + log_g(log_s) + log_s
            return with_abs(np.exp(expo.real) / np.pi, np.cos(expo.imag))

        v2, e2 = integrate_finite(circle, 0.0, math.pi, quad)
        value, err = value + v2, err + e2
    if with_magnitude:
        return value[0], err[0], value[1]
    return value, err
