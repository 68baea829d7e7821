"""Cox-Ingersoll-Ross signal ``r_n = x_n^2`` with Gamma-conjugate channels.

Every supported channel has an observation density of the form

    f_r(z) = c(z) r^e(z) exp(-g(z) r),

so a ``Gamma(k, b)`` prior turns into ``Gamma(k + e, b + g)`` and the
marginal is ``c b^k Gamma(k + e) / (Gamma(k) (b + g)^(k + e))``.

=============  ======================  ===========================  =========
channel        construction            f_r(z)                       support
=============  ======================  ===========================  =========
SquaredMult    z = r / G               (lam r / z^2) e^(-lam r/z)    z > 0
Inverse        z = G / r               lam r e^(-lam r z)            z > 0
SVprime        z = eps sqrt(r / G)     lam r |z|^-3 e^(-lam r/z^2)   z != 0
SVdoubleprime  z = eps sqrt(G / r)     lam r |z| e^(-lam r z^2)      real z
Poisson        z ~ Poisson(lam r)      e^(-lam r) (lam r)^z / z!     z in N
=============  ======================  ===========================  =========

``G ~ Exp(lam)`` and ``eps = ±1`` with probability 1/2.  Component ``i`` of
the filter class is ``Gamma(i + delta/2, rate = 1/(2 sigma^2))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy
from scipy.stats import binom, poisson

from .errors import ImpossibleObservationError
from .mixtures import (
    GAMMA_CIR,
    RADIAL_OU,
    MixtureDistribution,
    ScaleTheta,
    gamma_logpdf,
)
from .model_radial_ou import SERIES_TAIL, derive_discrete, poisson_mixture_logpdf, poisson_series_bounds

SQUARED_MULT = "SquaredMult"
INVERSE = "Inverse"
SV_PRIME = "SVprime"
SV_DOUBLE_PRIME = "SVdoubleprime"
POISSON = "Poisson"
CHANNELS = (SQUARED_MULT, INVERSE, SV_PRIME, SV_DOUBLE_PRIME, POISSON)


def channel_terms(kind, z, lam):
    """``(log c(z), e(z), g(z))`` for the observation density ``c r^e e^{-g r}``.

    ``log c = -inf`` marks an observation outside the channel's support.
    """
    z = float(z)
    if kind == POISSON:
        if z < 0 or z != int(z):
            return -np.inf, 0, 0.0
        return z * np.log(lam) - gammaln(z + 1.0), int(z), lam
    if kind == SQUARED_MULT:
        if not z > 0:
            return -np.inf, 1, 0.0
        return np.log(lam) - 2 * np.log(z), 1, lam / z
    if kind == INVERSE:
        if not z > 0:
            return -np.inf, 1, 0.0
        return np.log(lam), 1, lam * z
    if kind == SV_PRIME:
        if z == 0:
            return -np.inf, 1, 0.0
        return np.log(lam) - 3 * np.log(abs(z)), 1, lam / (z * z)
    if kind == SV_DOUBLE_PRIME:
        if z == 0:
            return -np.inf, 1, 0.0
        return np.log(lam) + np.log(abs(z)), 1, lam * z * z
    raise ValueError(f"unknown channel {kind!r}")


def channel_obs_logdensity(kind, r, z, lam):
    """``log f_r(z)`` for the given channel; ``-inf`` outside the support."""
    r = np.asarray(r, dtype=float)
    log_c, e, g = channel_terms(kind, z, lam)
    if not np.isfinite(log_c):
        return np.full(r.shape, -np.inf)[()]
    with np.errstate(divide="ignore"):
        out = log_c + xlogy(e, r) - g * r
    return np.where(r > 0, out, -np.inf)[()]


def pushforward_square(dist):
    """Law of ``x^2`` for a radial OU mixture: same scale, same weights."""
    if dist.family != RADIAL_OU:
        raise ValueError("expected a RadialOU mixture")
    return MixtureDistribution(GAMMA_CIR, dist.theta, dist.log_weights, dist.delta)


def pullback_sqrt(dist):
    """Inverse of :func:`pushforward_square`: law of ``sqrt(r)``."""
    if dist.family != GAMMA_CIR:
        raise ValueError("expected a GammaCIR mixture")
    return MixtureDistribution(RADIAL_OU, dist.theta, dist.log_weights, dist.delta)


@dataclass(frozen=True)
class CIRModel:
    """Squared radial OU signal with one of the Gamma-conjugate channels.

    Registered under family ``GammaCIR``.
    """

    theta_drift: float
    sigma_diff: float
    delta: float
    Delta: float
    lambda_noise: float
    channel: str = SQUARED_MULT

    tag = GAMMA_CIR

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
        if self.channel not in CHANNELS:
            problems.append(f"channel must be one of {CHANNELS}")
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
        if not self.theta_drift < 0:
            raise ValueError("a stationary law exists only for theta_drift < 0")
        return self.sigma_diff**2 / (2.0 * abs(self.theta_drift))

    # -- raw densities ------------------------------------------------------
    def obs_logpdf(self, r, z):
        return channel_obs_logdensity(self.channel, r, z, self.lambda_noise)

    def transition_logpdf(self, r, r_next, tail=SERIES_TAIL):
        """Poisson(a^2 r / (2 beta^2)) mixture of Gamma(k + delta/2, 1/(2 beta^2))."""
        r, r_next = np.broadcast_arrays(np.asarray(r, float), np.asarray(r_next, float))
        b2 = self.beta2
        mean = self.a**2 * r / (2.0 * b2)
        return poisson_mixture_logpdf(
            mean, lambda k: gamma_logpdf(k + 0.5 * self.delta, 0.5 / b2, r_next), tail
        )

    def component_logpdf(self, i, theta, r):
        return gamma_logpdf(i + 0.5 * self.delta, 0.5 / theta.sigma**2, r)

    # -- conjugate maps -----------------------------------------------------
    def update_index(self, i, z):
        return np.asarray(i) + channel_terms(self.channel, z, self.lambda_noise)[1]

    def update_theta(self, theta, z):
        log_c, _, g = channel_terms(self.channel, z, self.lambda_noise)
        if not np.isfinite(log_c):
            raise ImpossibleObservationError(z)
        rate = 0.5 / theta.sigma**2 + g
        return ScaleTheta(float(np.sqrt(0.5 / rate)))

    def update_component(self, i, theta, z):
        return int(self.update_index(i, z)), self.update_theta(theta, z)

    def component_marginal_logpdf(self, i, theta, z):
        log_c, e, g = channel_terms(self.channel, z, self.lambda_noise)
        shape = np.asarray(i, dtype=float) + 0.5 * self.delta
        if not np.isfinite(log_c):
            return np.full(shape.shape, -np.inf)
        b = 0.5 / theta.sigma**2
        return (
            log_c
            + shape * np.log(b)
            + gammaln(shape + e)
            - gammaln(shape)
            - (shape + e) * np.log(b + g)
        )

    def predict_theta(self, theta):
        return ScaleTheta(float(np.sqrt(self.beta2 + self.a**2 * theta.sigma**2)))

    def predict_component(self, i, theta):
        tau, lw = self.predict_component_log(i, theta)
        return tau, np.exp(lw)

    def predict_component_log(self, i, theta):
        a2s2 = self.a**2 * theta.sigma**2
        p = a2s2 / (self.beta2 + a2s2)
        return self.predict_theta(theta), binom.logpmf(np.arange(i + 1), i, p)

    def predict_dirac(self, r, tail=SERIES_TAIL):
        mean = self.a**2 * r / (2.0 * self.beta2)
        lo, hi = poisson_series_bounds(mean, tail)
        lw = poisson.logpmf(np.arange(hi + 1), mean)
        lw[:lo] = -np.inf
        return MixtureDistribution(GAMMA_CIR, ScaleTheta(np.sqrt(self.beta2)), lw, self.delta)

    def stationary(self):
        return MixtureDistribution.single(GAMMA_CIR, ScaleTheta(np.sqrt(self.rho2)), delta=self.delta)
