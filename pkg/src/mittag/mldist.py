"""The four-parameter Mittag-Leffler law ML(alpha, beta, gamma, theta).

Its Laplace transform is Gamma(beta+theta) E^{gamma+theta/alpha}_{alpha,beta+theta}(-x).
Special cases: (alpha,1,1,0) is the classical law P_alpha, (alpha,1,1,theta)
the two-parameter law ML(alpha, theta), gamma = 0 the beta-Mittag-Leffler law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .numkernel import (
    DEFAULT_QUAD,
    QuadratureSpec,
    SeriesError,
    as_generator,
    integrate_finite,
    integrate_halfline,
    log_recip_gamma,
)
from .powerconv import ConvMethod, _unit_dispatch, powerconv_density
from .stable import StableSpec, stable_density_lam, stable_sample, zolotarev_a, zolotarev_a_min

_EPS = np.finfo(float).eps
SERIES_TERMS = 200
_SERIES_MAX_U = 1.0 / 1.5  # u-series used below this (same conditioning as the stable series)
_TILTED_BURN_IN = 1000


@dataclass(frozen=True)
class MLParams:
    alpha: float
    beta: float = 1.0
    gamma_: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        a, b, g, th = self.alpha, self.beta, self.gamma_, self.theta
        if not all(math.isfinite(v) for v in (a, b, g, th)):
            raise ValueError("ML parameters must be finite")
        if not 0.0 < a < 1.0:
            raise ValueError(f"ML(alpha, beta, gamma, theta) requires 0 < alpha < 1, got alpha={a}")
        if not (-th < a * g < b):
            raise ValueError(
                "ML(alpha, beta, gamma, theta) requires −θ < αγ < β "
                f"(got alpha*gamma={a * g:g}, beta={b:g}, theta={th:g})"
            )

    @property
    def conv_order(self) -> float:
        """beta - alpha*gamma, the order of the power factor in the convolution."""
        return self.beta - self.alpha * self.gamma_

    @property
    def shape(self) -> float:
        """gamma + theta/alpha, the Prabhakar upper parameter of the transform."""
        return self.gamma_ + self.theta / self.alpha

    @property
    def is_two_parameter_family(self) -> bool:
        """True when the law is a polynomial tilt of P_alpha (beta - alpha*gamma = 1 - alpha)."""
        return abs(self.conv_order - (1.0 - self.alpha)) <= 1e-14

    @property
    def tilt_theta(self) -> float:
        """theta* with ML(alpha,beta,gamma,theta) = ML(alpha, theta*) in the tilted family."""
        return self.alpha * (self.gamma_ - 1.0) + self.theta


@dataclass(frozen=True)
class ProductFactors:
    beta_a: float
    beta_b: float
    ml2_theta: float


class SamplerStrategy(enum.Enum):
    AUTO = "auto"
    STABLE_TRANSFORM = "stable-transform"
    TILTED_METROPOLIS = "tilted-metropolis"
    TILTED_EXACT = "tilted-exact"
    BETA_PRODUCT = "beta-product"


def two_parameter(alpha: float, theta: float) -> MLParams:
    return MLParams(alpha, 1.0, 1.0, theta)


# ---------------------------------------------------------------------------
# density


def _series_in_u(p: MLParams, u):
    """{rho_nu * f_alpha(.|u)}(1) = sum_k (-u)^k / k! / Gamma(nu - alpha k)."""
    nu, a = p.conv_order, p.alpha
    k = np.arange(SERIES_TERMS, dtype=float)[:, None]
    log_rg, sign_rg = log_recip_gamma(nu - a * k)
    logu = np.log(u)[None, :]
    log_mag = log_rg - special.gammaln(k + 1.0) + k * logu
    with np.errstate(under="ignore"):
        terms = np.where(sign_rg == 0.0, 0.0, np.where(k % 2 == 0, 1.0, -1.0) * sign_rg * np.exp(log_mag))
    total = terms.sum(axis=0)
    tail = np.abs(terms[-2:]).max(axis=0)
    if not np.all(tail <= _EPS * np.maximum(np.abs(total), 1e-300)):
        raise SeriesError("ML density series did not converge")
    return total, 4.0 * _EPS * np.abs(terms).sum(axis=0)


def ml_density(
    p: MLParams,
    u,
    method: ConvMethod = ConvMethod.AUTO,
    quad: QuadratureSpec = DEFAULT_QUAD,
    full_output: bool = False,
):
    """Density of ML(alpha, beta, gamma, theta) at u > 0.

    p(u) = Gamma(beta+theta) rho_{gamma+theta/alpha}(u) {rho_{beta-alpha gamma} * f_alpha(.|u)}(1).
    AUTO evaluates the convolution by its power series in u for small u and
    by the powerconv routes otherwise; in the tilted family
    (beta - alpha gamma = 1 - alpha) it uses the closed reduction to P_alpha.
    An explicit ``method`` is forwarded to powerconv for every u.
    """
    method = ConvMethod(method)
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)):
        raise ValueError("ml_density is defined for u > 0")
    shape = u.shape
    flat = u.ravel()
    a, nu, g = p.alpha, p.conv_order, p.shape
    logu = np.log(flat)
    log_pref = special.gammaln(p.beta + p.theta) - special.gammaln(g) + (g - 1.0) * logu

    conv = np.zeros_like(flat)
    err = np.zeros_like(flat)
    labels = np.empty(flat.shape, dtype=object)
    if method is ConvMethod.AUTO and p.is_two_parameter_family:
        # {rho_(1-a) * f(.|u)}(1) = f_alpha(1|u) / (alpha u)
        conv = stable_density_lam(a, 1.0, flat, quad)
        err = 8.0 * _EPS * np.abs(conv)
        log_pref = log_pref - math.log(a) - logu
        labels[:] = "tilted-stable"
    else:
        if method in (ConvMethod.TILTING_CLOSED_FORM, ConvMethod.BETA_MIXTURE_QUADRATURE):
            # validates the method against nu
            powerconv_density(nu, StableSpec(a), 1.0, method, quad)
        small = (flat <= _SERIES_MAX_U) if method is ConvMethod.AUTO else np.zeros(flat.shape, bool)
        if np.any(small):
            conv[small], err[small] = _series_in_u(p, flat[small])
            labels[small] = "u-series"
        big = ~small
        if np.any(big):
            # conv(1|u) = u^((nu-1)/a) conv(u^(-1/a)|1)
            with np.errstate(under="ignore"):
                x = np.exp(-logu[big] / a)
            if method is ConvMethod.TILTING_CLOSED_FORM:
                conv[big] = stable_density_lam(a, x, 1.0, quad) * x / a
                err[big] = 8.0 * _EPS * np.abs(conv[big])
                labels[big] = method.value
            else:
                conv[big], err[big], labels[big] = _unit_dispatch(nu, a, x, method, quad)
            log_pref[big] += (nu - 1.0) / a * logu[big]
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        value = np.sign(conv) * np.exp(log_pref + np.log(np.abs(conv)))
        err = np.exp(log_pref + np.log(err))
    value = value.reshape(shape)
    if full_output:
        return value, err.reshape(shape), labels.reshape(shape)
    return value[()] if value.ndim == 0 else value


def ml_density_at_zero(p: MLParams) -> float:
    """Limit of the density as u -> 0+ (0, finite or inf), from the k = 0 series term."""
    g = p.shape
    if g > 1.0:
        return 0.0
    if g < 1.0:
        return math.inf
    return math.exp(special.gammaln(p.beta + p.theta) - special.gammaln(p.conv_order))


def product_density(p: MLParams, t, quad: QuadratureSpec = DEFAULT_QUAD):
    """Density of T = V U, int_0^1 p_V(t/u) beta(u | a, b) du / u, as a separate route.

    U ~ Beta(theta/alpha + gamma, beta/alpha - gamma), V ~ ML(alpha, beta + theta).
    On u < 1/2 the variable s = t/u is used instead, which keeps the mass of
    p_V (at s of order 1) resolved for tiny t.
    """
    f = product_factors(p)
    v_params = two_parameter(p.alpha, f.ml2_theta)
    t = np.asarray(t, dtype=float)
    tc = t.reshape(-1, 1)
    a, b = f.beta_a, f.beta_b
    log_b = special.gammaln(a + b) - special.gammaln(a) - special.gammaln(b)

    def v_density(s):
        live = np.isfinite(s)  # the density vanishes at s = inf
        dens = np.zeros(s.shape)
        dens[live] = ml_density(v_params, s[live], quad=quad)
        return dens

    def small_u(y):  # s = 2t + y, u = t/s in (0, 1/2), du/u = -ds/s
        with np.errstate(over="ignore", divide="ignore"):
            s = 2.0 * tc + y
            log_w = np.log(tc) - np.log(s)
            w = np.exp(log_b + (a - 1.0) * log_w + (b - 1.0) * np.log1p(-np.exp(log_w)) - np.log(s))
        dens = v_density(s)
        with np.errstate(invalid="ignore", over="ignore"):
            return np.where(dens == 0.0, 0.0, dens * w)

    def large_u(v):  # u = 1 - v, v in (0, 1/2)
        u = 1.0 - v
        w = np.exp(log_b + (a - 2.0) * np.log(u) + (b - 1.0) * np.log(v))
        return v_density(np.broadcast_to(tc / u, (tc.shape[0], v.shape[-1]))) * w

    v1, _ = integrate_halfline(small_u, 0.0, quad)
    v2, _ = integrate_finite(large_u, 0.0, 0.5, quad)
    return (v1 + v2).reshape(t.shape)


# ---------------------------------------------------------------------------
# moments and the product representation


def ml_log_moment(p: MLParams, r):
    r = np.asarray(r, dtype=float)
    g = p.shape
    if np.any(~(r > -g)):
        raise ValueError(f"moment exponent must exceed -(gamma + theta/alpha) = {-g:g}")
    bt = p.beta + p.theta
    # paired differences so that r = 0 gives exactly 0
    return (special.gammaln(g + r) - special.gammaln(g)) + (special.gammaln(bt) - special.gammaln(p.alpha * r + bt))


def ml_moment(p: MLParams, r):
    """E[U^r] = Gamma(beta+theta) Gamma(gamma+theta/alpha+r) / (Gamma(gamma+theta/alpha) Gamma(alpha r+beta+theta))."""
    out = np.exp(ml_log_moment(p, r))
    return out[()] if np.ndim(out) == 0 else out


def ml_norm_const(alpha: float, beta: float, theta: float) -> float:
    """Gamma(1+beta+theta) Gamma(1+theta/alpha) / (Gamma(1+(beta+theta)/alpha) Gamma(1+theta)).

    Note: the beta-product density computed by ``product_density`` is already
    normalised and does not carry this factor.
    """
    num = np.array([1.0 + beta + theta, 1.0 + theta / alpha])
    den = np.array([1.0 + (beta + theta) / alpha, 1.0 + theta])
    if np.any((den <= 0.0) & (den == np.floor(den))):
        raise ValueError("gamma pole in the denominator of the normalising constant")
    sign = np.prod(special.gammasgn(num)) * np.prod(special.gammasgn(den))
    return float(sign * np.exp(special.gammaln(num).sum() - special.gammaln(den).sum()))


def product_factors(p: MLParams) -> ProductFactors:
    """Beta(theta/alpha + gamma, beta/alpha - gamma) x ML(alpha, beta + theta) factors."""
    a = p.theta / p.alpha + p.gamma_
    b = p.beta / p.alpha - p.gamma_
    if not b > 0.0:
        raise ValueError("the beta factor needs beta/alpha - gamma > 0")
    if not a > 0.0:
        raise ValueError("the beta factor needs theta/alpha + gamma > 0")
    return ProductFactors(a, b, p.beta + p.theta)


def beta_log_moment(a: float, b: float, k):
    k = np.asarray(k, dtype=float)
    return special.gammaln(a + k) - special.gammaln(a) + special.gammaln(a + b) - special.gammaln(a + b + k)


def product_log_moment(p: MLParams, k):
    """log E[U^k] + log E[V^k] for the product factors."""
    f = product_factors(p)
    return beta_log_moment(f.beta_a, f.beta_b, k) + ml_log_moment(two_parameter(p.alpha, f.ml2_theta), k)


# ---------------------------------------------------------------------------
# samplers


def _tilted_angle_sample(alpha: float, q: float, n: int, gen: np.random.Generator):
    """Draw U on (0, pi) with density proportional to A(U)^(-q)."""
    out = np.empty(n)
    filled = 0
    if q == 0.0:
        return gen.uniform(0.0, np.pi, size=n)
    if q > 0.0:
        a0 = zolotarev_a_min(alpha)
        while filled < n:
            m = max(64, int(1.3 * (n - filled)) + 16)
            u = gen.uniform(0.0, np.pi, size=m)
            acc = gen.uniform(size=m) < (a0 / zolotarev_a(u, alpha)) ** q
            take = u[acc][: n - filled]
            out[filled : filled + take.size] = take
            filled += take.size
        return out
    # q < 0: A^|q| ~ (pi - u)^(-pexp) near pi; envelope (pi - u)^(-pexp)
    pexp = -q / (1.0 - alpha)

    def log_ratio(w):  # w = pi - u
        return -q * np.log(zolotarev_a(w, alpha, reflected=True)) + pexp * np.log(w)

    grid = np.concatenate([np.geomspace(1e-8, 1.0, 400), np.linspace(1.0, np.pi - 1e-8, 400)])
    vals = log_ratio(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    res = optimize.minimize_scalar(lambda w: -log_ratio(w), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-12})
    log_m = max(vals[i], -res.fun) + 1e-9
    while filled < n:
        m = max(64, int(1.5 * (n - filled)) + 16)
        w = np.pi * gen.uniform(size=m) ** (1.0 / (1.0 - pexp))
        w = w[w > 0.0]
        acc = np.log(gen.uniform(size=w.size)) < log_ratio(w) - log_m
        take = w[acc][: n - filled]
        out[filled : filled + take.size] = np.pi - take
        filled += take.size
    return out


def sample_two_parameter_exact(alpha: float, theta: float, n: int, rng) -> np.ndarray:
    """Exact draws from ML(alpha, theta), theta > -alpha.

    P_alpha is (E / A(U))^(1-alpha) in the Kanter representation; tilting by
    t^(theta/alpha) makes E ~ Gamma(1 + q) and U ~ A(U)^(-q) independently,
    q = theta (1 - alpha) / alpha.
    """
    if not theta > -alpha:
        raise ValueError("ML(alpha, theta) needs theta > -alpha")
    gen = as_generator(rng)
    q = theta * (1.0 - alpha) / alpha
    u = _tilted_angle_sample(alpha, q, n, gen)
    e = gen.standard_gamma(1.0 + q, size=n)
    return (e / zolotarev_a(u, alpha)) ** (1.0 - alpha)


def sample_two_parameter_metropolis(
    alpha: float, theta: float, n: int, rng, burn_in: int = _TILTED_BURN_IN, thin: int = 1
) -> np.ndarray:
    """Independence Metropolis chain for ML(alpha, theta) with P_alpha proposals.

    Acceptance probability min(1, (t'/t)^(theta/alpha)). Draws are correlated.
    """
    gen = as_generator(rng)
    total = burn_in + n * thin
    props = stable_sample(StableSpec(alpha), total + 1, gen) ** (-alpha)
    log_u = np.log(gen.uniform(size=total))
    expo = theta / alpha
    log_props = np.log(props)
    out = np.empty(n)
    cur = log_props[0]
    j = 0
    for i in range(total):
        cand = log_props[i + 1]
        if log_u[i] < expo * (cand - cur):
            cur = cand
        if i >= burn_in and (i - burn_in) % thin == thin - 1:
            out[j] = cur
            j += 1
    return np.exp(out)


def ml_sample(
    p: MLParams,
    n: int,
    rng,
    strategy: SamplerStrategy = SamplerStrategy.AUTO,
    inner: SamplerStrategy = SamplerStrategy.TILTED_EXACT,
) -> np.ndarray:
    """Draws from ML(alpha, beta, gamma, theta).

    STABLE_TRANSFORM: U = S^(-alpha) (only P_alpha).
    TILTED_METROPOLIS / TILTED_EXACT: tilted family beta - alpha gamma = 1 - alpha.
    BETA_PRODUCT: T = V U with V ~ ML(alpha, beta + theta) drawn by ``inner``.
    AUTO picks the first exact strategy that applies.
    """
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    strategy, inner = SamplerStrategy(strategy), SamplerStrategy(inner)
    gen = as_generator(rng)
    a = p.alpha
    classical = p.beta == 1.0 and p.gamma_ == 1.0 and p.theta == 0.0
    if strategy is SamplerStrategy.AUTO:
        if classical:
            strategy = SamplerStrategy.STABLE_TRANSFORM
        elif p.is_two_parameter_family:
            strategy = SamplerStrategy.TILTED_EXACT
        else:
            strategy = SamplerStrategy.BETA_PRODUCT
    if strategy is SamplerStrategy.STABLE_TRANSFORM:
        if not classical:
            raise ValueError("the stable transform sampler only covers ML(alpha, 1, 1, 0)")
        return stable_sample(StableSpec(a), n, gen) ** (-a)
    if strategy in (SamplerStrategy.TILTED_EXACT, SamplerStrategy.TILTED_METROPOLIS):
        if not p.is_two_parameter_family:
            raise ValueError("tilted samplers need beta - alpha*gamma = 1 - alpha")
        if strategy is SamplerStrategy.TILTED_EXACT:
            return sample_two_parameter_exact(a, p.tilt_theta, n, gen)
        return sample_two_parameter_metropolis(a, p.tilt_theta, n, gen)
    if strategy is SamplerStrategy.BETA_PRODUCT:
        if inner not in (SamplerStrategy.TILTED_EXACT, SamplerStrategy.TILTED_METROPOLIS):
            raise ValueError("the inner sampler must be a tilted strategy")
        f = product_factors(p)
        v = ml_sample(two_parameter(a, f.ml2_theta), n, gen, inner)
        return v * gen.beta(f.beta_a, f.beta_b, size=n)
    raise ValueError(f"unknown sampler strategy {strategy!r}")


def mlmc_step(alpha: float, theta: float, n: int, t_n, rng):
    """One step T_(n-1) = T_n U_n of the Mittag-Leffler Markov chain.

    U_n ~ Beta((theta + n - 1)/alpha + 1, 1/alpha - 1) maps ML(alpha, theta + n)
    to ML(alpha, theta + n - 1).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n < 1 or int(n) != n:
        raise ValueError("chain index n must be an integer >= 1")
    a = (theta + n - 1.0) / alpha + 1.0
    if not a > 0.0:
        raise ValueError("need theta + n - 1 > -alpha")
    gen = as_generator(rng)
    t_n = np.asarray(t_n, dtype=float)
    if np.any(~(t_n > 0.0)):
        raise ValueError("chain states must be positive")
    return t_n * gen.beta(a, 1.0 / alpha - 1.0, size=t_n.shape)
