"""Sampled radial Ornstein-Uhlenbeck signal observed through ``y = x w``.

The noise is ``w = Gamma^(-1/2)`` with ``Gamma ~ Exp(lambda)``.  Filters live
in mixtures of ``nu^(i, delta)_sigma`` (law of the square root of a
``Gamma(i + delta/2, 1/(2 sigma^2))`` variable): every update raises the
index by one and every prediction spreads index ``i`` binomially over
``0..i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy
from scipy.stats import binom, poisson

from .errors import ImpossibleObservationError
from .mixtures import (
    LOG_2PI,
    RADIAL_OU,
    MixtureDistribution,
    ScaleTheta,
    log_abs_moment,
    sqrt_gamma_logpdf,
)

SERIES_TAIL = 1e-14


def derive_discrete(theta_drift, sigma_diff, Delta):
    """Exact AR(1) constants ``(a, beta2)`` of the OU process sampled every ``Delta``."""
    if not sigma_diff > 0 or not Delta > 0:
        raise ValueError("sigma_diff and Delta must be positive")
    a = float(np.exp(theta_drift * Delta))
    x = 2.0 * theta_drift * Delta
    # (e^x - 1)/x -> 1 as x -> 0
    factor = np.expm1(x) / x if x != 0 else 1.0
    return a, float(sigma_diff**2 * Delta * factor)


def poisson_series_bounds(mean, tail=SERIES_TAIL):
    """Index range ``[lo, hi]`` carrying all but ``tail`` of a Poisson(mean) pmf."""
    mean = np.asarray(mean, dtype=float)
    hi = poisson.isf(tail / 2, np.max(mean)) if np.max(mean) > 0 else 0
    lo = poisson.ppf(tail / 2, np.min(mean)) if np.min(mean) > 0 else 0
    return int(max(lo - 1, 0)), int(hi) + 1


def poisson_mixture_logpdf(mean, comp_logpdf, tail=SERIES_TAIL):
    """``log sum_k Poisson(k; mean) exp(comp_logpdf(k))`` truncated adaptively.

    ``comp_logpdf(k)`` receives an integer array broadcastable against ``mean``
    with a leading series axis.
    """
    mean = np.asarray(mean, dtype=float)
    lo, hi = poisson_series_bounds(mean, tail)
    k = np.arange(lo, hi + 1).reshape((-1,) + (1,) * mean.ndim)
    with np.errstate(divide="ignore"):
        logw = xlogy(k, mean) - mean - gammaln(k + 1.0)
    return logsumexp(logw + comp_logpdf(k), axis=0)


def _check_stationary(theta_drift):
    if not theta_drift < 0:
        raise ValueError("a stationary law exists only for theta_drift < 0")


def noise_obs_logpdf(x, y, lambda_noise):
    """``log f_x(y)`` with ``f_x(y) = 2 lam x^2 / y^3 exp(-lam x^2 / y^2)``, y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(2.0 * lambda_noise * x * x) - 3.0 * np.log(y) - lambda_noise * x * x / (y * y)
    return np.where(y > 0, out, -np.inf)


def log_t_cosh(n, z):
    """``log T^n(cosh)(z)`` with ``T f = f' / z``, for ``n`` in {0, 1, 2} and z >= 0."""
    z = np.abs(np.asarray(z, dtype=float))
    small = z < _TAYLOR_CUT[n]
    zs = np.where(small, z, 1.0)
    zl = np.where(small, 1.0, z)
    with np.errstate(over="ignore"):
        if n == 0:
            big = zl + np.log1p(np.exp(-2 * zl)) - np.log(2.0)
        elif n == 1:
            big = zl + np.log(-np.expm1(-2 * zl)) - np.log(2.0) - np.log(zl)
        elif n == 2:
            # (z cosh z - sinh z) / z^3 = e^z ((z - 1) + (z + 1) e^{-2z}) / (2 z^3)
            big = zl + np.log((zl - 1) + (zl + 1) * np.exp(-2 * zl)) - np.log(2.0) - 3 * np.log(zl)
        else:
            raise ValueError("closed forms are available for n in {0, 1, 2}")
    return np.where(small, np.log(_t_cosh_taylor(n, zs)), big)


# below these |z| the closed forms cancel catastrophically; use the power series
_TAYLOR_CUT = {0: 0.0, 1: 1e-4, 2: 1.0}


def _t_cosh_taylor(n, z):
    # T^n cosh(z) = sum_j z^(2j) 2^n (j+n)! / (j! (2j+2n)!)
    j = np.arange(20).reshape((-1,) + (1,) * np.ndim(z))
    logc = n * np.log(2.0) + gammaln(j + n + 1) - gammaln(j + 1) - gammaln(2 * j + 2 * n + 1)
    return np.sum(np.exp(logc) * np.asarray(z) ** (2 * j), axis=0)


@dataclass(frozen=True)
class RadialOUModel:
    """Radial OU signal of dimension ``delta`` sampled every ``Delta``.

    Registered under family ``RadialOU``; derived constants ``a``, ``beta2``
    and (for ``theta_drift < 0``) ``rho2``.
    """

    theta_drift: float
    sigma_diff: float
    delta: float
    Delta: float
    lambda_noise: float

    tag = RADIAL_OU

    def __post_init__(self):
        problems = []
        if not self.sigma_diff > 0:
            problems.append("sigma_diff must be positive")
        if not self.delta >= 1:
            problems.append("delta must be >= 1")
        if not self.Delta > 0:
            problems.append("Delta must be positive")
        if not self.lambda_noise > 0:
            problems.append("lambda_noise must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def a(self):
        return derive_discrete(self.theta_drift, self.sigma_diff, self.Delta)[0]

    @property
    def beta2(self):
        return derive_discrete(self.theta_drift, self.sigma_diff, self.Delta)[1]

    @property
    def rho2(self):
        _check_stationary(self.theta_drift)
        return self.sigma_diff**2 / (2.0 * abs(self.theta_drift))

    # -- raw densities ------------------------------------------------------
    def obs_logpdf(self, x, y):
        return noise_obs_logpdf(x, y, self.lambda_noise)

    def transition_logpdf(self, x, x_next, tail=SERIES_TAIL):
        """Poisson(a^2 x^2 / (2 beta^2)) mixture of ``nu^(k, delta)_beta`` at ``x_next``."""
        x, x_next = np.broadcast_arrays(np.asarray(x, float), np.asarray(x_next, float))
        a, b2 = self.a, self.beta2
        beta = np.sqrt(b2)
        mean = a * a * x * x / (2.0 * b2)
        return poisson_mixture_logpdf(
            mean, lambda k: sqrt_gamma_logpdf(k, beta, self.delta, x_next), tail
        )

    def transition_logpdf_closed(self, x, x_next):
        """Closed form for ``delta = 2n + 1``, ``n`` in {0, 1, 2}."""
        n = int(round((self.delta - 1) / 2))
        if self.delta not in (1, 3, 5):
            raise ValueError("closed-form transition needs delta in {1, 3, 5}")
        x = np.asarray(x, float)
        x_next = np.asarray(x_next, float)
        a, b2 = self.a, self.beta2
        z = a * x * x_next / b2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                np.log(2.0)
                - 0.5 * LOG_2PI
                - 0.5 * np.log(b2)
                - x_next**2 / (2 * b2)
                - a * a * x * x / (2 * b2)
                + xlogy(2 * n, x_next)
                - n * np.log(b2)
                + log_t_cosh(n, z)
            )
        return np.where(x_next > 0, out, -np.inf)

    def component_logpdf(self, i, theta, x):
        return sqrt_gamma_logpdf(i, theta.sigma, self.delta, x)

    # -- conjugate maps -----------------------------------------------------
    def update_index(self, i, y):
        return np.asarray(i) + 1

    def update_theta(self, theta, y):
        if not y > 0:
            raise ImpossibleObservationError(y)
        s = theta.sigma
        return ScaleTheta(s * y / np.sqrt(y * y + 2.0 * self.lambda_noise * s * s))

    def update_component(self, i, theta, y):
        return i + 1, self.update_theta(theta, y)

    def marginal_component(self, i, sigma, y):
        """``(2 / (sqrt(lam) sigma)) p_i((y / (sqrt(lam) sigma)))`` with
        ``p_i(u) = (delta + 2i) u^(delta-1+2i) / (u^2 + 2)^(i + 1 + delta/2)``."""
        i = np.asarray(i)
        y = np.asarray(y, float)
        scale = np.sqrt(self.lambda_noise) * sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            u = y / scale
            out = (
                np.log(2.0 / scale)
                + np.log(self.delta + 2 * i)
                + xlogy(self.delta - 1 + 2 * i, u)
                - (i + 1 + 0.5 * self.delta) * np.log(u * u + 2.0)
            )
        return np.where(y > 0, out, -np.inf)

    def component_marginal_logpdf(self, i, theta, y):
        return self.marginal_component(i, theta.sigma, y)

    def predict_theta(self, theta):
        return ScaleTheta(float(np.sqrt(self.beta2 + self.a**2 * theta.sigma**2)))

    def success_probability(self, sigma):
        a2s2 = self.a**2 * sigma**2
        return a2s2 / (self.beta2 + a2s2)

    def predict_component(self, i, theta):
        """``tau^2 = beta^2 + a^2 sigma^2`` and Binomial(i, a^2 sigma^2 / tau^2) weights."""
        tau, lw = self.predict_component_log(i, theta)
        return tau, np.exp(lw)

    def predict_component_log(self, i, theta):
        p = self.success_probability(theta.sigma)
        return self.predict_theta(theta), binom.logpmf(np.arange(i + 1), i, p)

    def predict_dirac(self, x, tail=SERIES_TAIL):
        """Transition law from a point mass, truncated where the Poisson tail < ``tail``."""
        mean = self.a**2 * x * x / (2.0 * self.beta2)
        lo, hi = poisson_series_bounds(mean, tail)
        k = np.arange(hi + 1)
        lw = poisson.logpmf(k, mean)
        lw[:lo] = -np.inf
        return MixtureDistribution(RADIAL_OU, ScaleTheta(np.sqrt(self.beta2)), lw, self.delta)

    def stationary(self):
        return MixtureDistribution.single(RADIAL_OU, ScaleTheta(np.sqrt(self.rho2)), delta=self.delta)


def moment_sum_identity(i, k, delta):
    """Both sides of the moment-ratio / falling-factorial identity.

    ``C_{2(i+k)+d-1} / (C_{2k+d-1} C_{2i+d-1})`` against
    ``sum_j k(k-1)...(k-j+1) binom(i,j) 2^j / C_{2j+d-1}``.
    """
    d1 = delta - 1.0
    lhs = np.exp(log_abs_moment(2 * (i + k) + d1) - log_abs_moment(2 * k + d1) - log_abs_moment(2 * i + d1))
    j = np.arange(min(i, k) + 1)
    log_terms = (
        gammaln(k + 1) - gammaln(k - j + 1)
        + gammaln(i + 1) - gammaln(j + 1) - gammaln(i - j + 1)
        + j * np.log(2.0)
        - log_abs_moment(2 * j + d1)
    )
    rhs = np.exp(logsumexp(log_terms))
    return float(lhs), float(rhs)
