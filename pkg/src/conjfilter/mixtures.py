"""Mixture representations, Gaussian absolute moments and component densities.

Three component families are supported:

``KalmanExt``
    ``nu^i_(mu, m, s2)(dx) ∝ (x + mu)^(2i) N(m, s2)(dx)`` on the real line.
``RadialOU``
    ``nu^(i, delta)_sigma``, the law of ``sqrt(G)`` with
    ``G ~ Gamma(i + delta/2, rate = 1/(2 sigma^2))``.
``GammaCIR``
    ``Gamma(i + delta/2, rate = 1/(2 sigma^2))`` itself, on ``r = x^2``.

A mixture shares a single structural parameter between all its components
and differs only in the component index.  Weights are kept as log-weights.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .errors import DegenerateDistributionError

KALMAN = "KalmanExt"
RADIAL_OU = "RadialOU"
GAMMA_CIR = "GammaCIR"
FAMILIES = (KALMAN, RADIAL_OU, GAMMA_CIR)

LOG_2PI = np.log(2.0 * np.pi)


# ---------------------------------------------------------------------------
# Gaussian absolute moments
# ---------------------------------------------------------------------------

def log_abs_moment(alpha):
    """Return ``log E|X|^alpha`` for a standard normal ``X``.

    Uses ``C_alpha = 2^(alpha/2) Gamma((alpha+1)/2) / sqrt(pi)``. Accepts
    scalars or arrays.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha < 0) or np.any(np.isnan(alpha)):
        raise ValueError("absolute moments are defined for alpha >= 0 only")
    out = 0.5 * alpha * np.log(2.0) + gammaln(0.5 * (alpha + 1.0)) - 0.5 * np.log(np.pi)
    return out[()] if out.ndim == 0 else out


def abs_moment(alpha):
    return np.exp(log_abs_moment(alpha))


def log_c2i_shifted(i, s, sigma2):
    """``log E((sigma X + s)^(2i))`` for standard normal ``X``.

    Evaluated as a log-sum-exp over the binomial expansion
    ``sum_k s^(2k) sigma^(2(i-k)) (C_2i / C_2k) binom(i, k)``.
    """
    if i < 0 or sigma2 < 0:
        raise ValueError("need i >= 0 and sigma2 >= 0")
    if i == 0:
        return 0.0
    k = np.arange(i + 1)
    terms = (
        xlogy(k, s * s)
        + xlogy(i - k, sigma2)
        + log_abs_moment(2 * i)
        - log_abs_moment(2 * k)
        + _log_binom(i, k)
    )
    return float(logsumexp(terms))


def c2i_shifted(i, s, sigma2):
    """``E((sigma X + s)^(2i))`` for standard normal ``X``; always positive."""
    return float(np.exp(log_c2i_shifted(i, s, sigma2)))


def moment_binom_identity(i, k):
    """Both sides of ``binom(2i, 2k) C_2(i-k) = (C_2i / C_2k) binom(i, k)``."""
    if not 0 <= k <= i:
        raise ValueError("need 0 <= k <= i")
    lhs = comb(2 * i, 2 * k) * abs_moment(2 * (i - k))
    rhs = abs_moment(2 * i) / abs_moment(2 * k) * comb(i, k)
    return float(lhs), float(rhs)


def log_abs_shifted_moment(n, s, sigma2):
    """``log |E((sigma X + s)^n)|``; every term of the expansion has the sign of
    ``s^n`` so the sum is free of cancellation."""
    if n == 0:
        return 0.0
    j = np.arange(0, n + 1, 2)
    terms = _log_binom(n, j) + xlogy(n - j, abs(s)) + xlogy(j / 2, sigma2) + log_abs_moment(j)
    return float(logsumexp(terms))


def _log_binom(n, k):
    n = np.asarray(n, dtype=float)
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


# ---------------------------------------------------------------------------
# Structural parameters and mixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KalmanTheta:
    """Structural parameter ``(mu, m, sigma2)`` of the extended Kalman class."""

    mu: float
    m: float
    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(frozen=True)
class ScaleTheta:
    """Scale ``sigma`` shared by the radial OU and Gamma-CIR classes."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


def normalize_log(log_w):
    """Return normalized log-weights (log-sum-exp shift)."""
    log_w = np.asarray(log_w, dtype=float)
    if log_w.size == 0 or not np.any(np.isfinite(log_w)):
        raise DegenerateDistributionError("all log-weights are -inf")
    if np.any(np.isnan(log_w)) or np.any(log_w == np.inf):
        raise ValueError("log-weights must be finite or -inf")
    total = logsumexp(log_w)
    # already normalized input is returned unshifted so relabelling is exact
    if abs(total) <= 4 * np.finfo(float).eps:
        return log_w.copy()
    return log_w - total


def normalize(log_w):
    """Exponentiate log-weights into a probability vector summing to one."""
    w = np.exp(normalize_log(log_w))
    return w / w.sum()


def mixture_length(log_w):
    """Largest index carrying positive weight."""
    idx = np.flatnonzero(np.isfinite(np.asarray(log_w)))
    return int(idx[-1])


def prune_log_weights(log_w, threshold):
    """Drop weights below ``threshold``, renormalize and trim trailing zeros.

    ``threshold == 0`` keeps the weights exactly as they are.
    """
    log_w = np.asarray(log_w, dtype=float)
    if threshold <= 0:
        return log_w
    log_w = normalize_log(log_w)
    kept = np.where(log_w >= np.log(threshold), log_w, -np.inf)
    if not np.any(np.isfinite(kept)):
        kept = np.where(log_w == log_w.max(), log_w, -np.inf)
    kept = normalize_log(kept)
    return kept[: mixture_length(kept) + 1]


@dataclass(frozen=True)
class MixtureDistribution:
    """``sum_i alpha_i nu^i_theta`` for one family and one shared ``theta``.

    ``log_weights[i]`` is ``log alpha_i``; ``-inf`` marks an empty slot.
    """

    family: str
    theta: KalmanTheta | ScaleTheta
    log_weights: np.ndarray = field(repr=False)
    delta: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == KALMAN:
            if not isinstance(self.theta, KalmanTheta):
                raise TypeError("KalmanExt mixtures need a KalmanTheta")
        else:
            if not isinstance(self.theta, ScaleTheta):
                raise TypeError(f"{self.family} mixtures need a ScaleTheta")
            if self.delta is None or not self.delta >= 1:
                raise ValueError("delta >= 1 is required")
        lw = normalize_log(self.log_weights)
        lw.setflags(write=False)
        object.__setattr__(self, "log_weights", lw)

    @classmethod
    def from_weights(cls, family, theta, weights, delta=None):
        with np.errstate(divide="ignore"):
            lw = np.log(np.asarray(weights, dtype=float))
        return cls(family, theta, lw, delta)

    @classmethod
    def single(cls, family, theta, index=0, delta=None):
        lw = np.full(index + 1, -np.inf)
        lw[index] = 0.0
        return cls(family, theta, lw, delta)

    @property
    def weights(self):
        w = np.exp(self.log_weights)
        return w / w.sum()

    @property
    def length(self):
        return mixture_length(self.log_weights)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.flatnonzero(np.isfinite(self.log_weights))
        comps = np.stack(
            [component_logpdf(self.family, int(i), self.theta, x, self.delta) for i in idx]
        )
        lw = self.log_weights[idx].reshape((-1,) + (1,) * x.ndim)
        return logsumexp(lw + comps, axis=0)

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def moment(self, order):
        return mixture_moment(self, order)


@dataclass(frozen=True)
class Dirac:
    """Point mass at ``x``; only valid as an initial condition."""

    x: float


# ---------------------------------------------------------------------------
# Component densities
# ---------------------------------------------------------------------------

def kalman_component_logpdf(i, theta, x):
    x = np.asarray(x, dtype=float)
    s = theta.m + theta.mu
    with np.errstate(divide="ignore"):
        out = (
            xlogy(2 * i, np.abs(x + theta.mu))
            - log_c2i_shifted(i, s, theta.sigma2)
            - 0.5 * (LOG_2PI + np.log(theta.sigma2))
            - 0.5 * (x - theta.m) ** 2 / theta.sigma2
        )
    return out


def sqrt_gamma_logpdf(i, sigma, delta, x):
    """Log density of ``nu^(i, delta)_sigma`` on ``(0, inf)``."""
    x = np.asarray(x, dtype=float)
    p = delta - 1.0 + 2 * i
    with np.errstate(divide="ignore", invalid="ignore"):
        u = x / sigma
        out = (
            np.log(2.0)
            - 0.5 * LOG_2PI
            - np.log(sigma)
            + xlogy(p, u)
            - log_abs_moment(p)
            - 0.5 * u * u
        )
    return np.where(x > 0, out, -np.inf)


def gamma_logpdf(shape, rate, r):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shape * np.log(rate) - gammaln(shape) + xlogy(shape - 1.0, r) - rate * r
    return np.where(r > 0, out, -np.inf)


def cir_component_logpdf(i, sigma, delta, r):
    return gamma_logpdf(i + 0.5 * delta, 0.5 / sigma**2, r)


def component_logpdf(family, i, theta, x, delta=None):
    """Log density of component ``i`` of ``family`` at ``x``; -inf off support."""
    if i < 0:
        raise ValueError("component index must be >= 0")
    if family == KALMAN:
        return kalman_component_logpdf(i, theta, x)
    if family == RADIAL_OU:
        return sqrt_gamma_logpdf(i, theta.sigma, delta, x)
    if family == GAMMA_CIR:
        return cir_component_logpdf(i, theta.sigma, delta, x)
    raise ValueError(f"unknown family {family!r}")


def component_moment(family, i, theta, order, delta=None):
    if order not in (1, 2):
        raise ValueError("only orders 1 and 2 are supported")
    if family == KALMAN:
        # with v = x - m ~ N(0, s2) tilted by (v + s)^(2i), Gaussian integration
        # by parts gives E v = 2i s2 M_{2i-1} / M_2i and
        # E v^2 = s2 + 2i (2i - 1) s2^2 M_{2i-2} / M_2i,  M_n = E (v + s)^n
        s, s2, m = theta.m + theta.mu, theta.sigma2, theta.m
        if i == 0:
            ev, ev2 = 0.0, s2
        else:
            lm = lambda n: log_abs_shifted_moment(n, s, s2)
            sign = 1.0 if s >= 0 else -1.0
            ev = sign * 2 * i * s2 * np.exp(lm(2 * i - 1) - lm(2 * i)) if s != 0 else 0.0
            ev2 = s2 + 2 * i * (2 * i - 1) * s2 * s2 * np.exp(lm(2 * i - 2) - lm(2 * i))
        if order == 1:
            return float(m + ev)
        return float(m * m + 2 * m * ev + ev2)
    shape = i + 0.5 * delta
    if family == RADIAL_OU:
        sigma = theta.sigma
        if order == 1:
            p = delta - 1.0 + 2 * i
            return sigma * float(np.exp(log_abs_moment(p + 1) - log_abs_moment(p)))
        return 2.0 * shape * sigma**2
    if family == GAMMA_CIR:
        scale = 2.0 * theta.sigma**2
        return shape * scale if order == 1 else shape * (shape + 1) * scale**2
    raise ValueError(f"unknown family {family!r}")


def mixture_moment(dist, order):
    """Exact mean (order 1) or second moment (order 2) of a mixture."""
    if order not in (1, 2):
        raise ValueError("only orders 1 and 2 are supported")
    w = dist.weights
    total = 0.0
    for i in np.flatnonzero(w > 0):
        total += w[i] * component_moment(dist.family, int(i), dist.theta, order, dist.delta)
    return float(total)
