"""Linear Gaussian state space model with non-Gaussian initial laws.

Signal ``x_n = a x_{n-1} + beta eta_n`` and observation
``y_n = h x_n + gamma w_n``.  Mixtures of
``nu^i_(mu, m, s2) ∝ (x + mu)^(2i) N(m, s2)`` are closed under both the
update and the prediction step, and the mixture length never changes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, xlogy

from .errors import SingularParameterError
from .mixtures import (
    KALMAN,
    LOG_2PI,
    KalmanTheta,
    MixtureDistribution,
    _log_binom,
    kalman_component_logpdf,
    log_abs_moment,
    log_c2i_shifted,
)


def _gaussian_logpdf(x, mean, var):
    return -0.5 * (LOG_2PI + np.log(var)) - 0.5 * (np.asarray(x) - mean) ** 2 / var


def kalman_update_theta(theta, y, h, gamma2):
    """Posterior ``(mu, m_hat, s2_hat)``; ``mu`` and the index are unchanged."""
    denom = gamma2 + h * h * theta.sigma2
    m_hat = (theta.m * gamma2 + h * y * theta.sigma2) / denom
    s2_hat = theta.sigma2 * gamma2 / denom
    return KalmanTheta(theta.mu, m_hat, s2_hat)


def gaussian_push_theta(theta, gain, noise2, need_shift=True):
    """Parameters of the law of ``gain * X + N(0, noise2)`` for ``X ~ nu^i_theta``.

    Returns ``(mu_bar, m_bar, s2_bar)``.  ``mu_bar`` divides by ``gain``; with
    ``need_shift=False`` a zero gain yields ``mu_bar = 0`` (only index 0 used).
    """
    s2_bar = noise2 + gain * gain * theta.sigma2
    m_bar = gain * theta.m
    if gain == 0:
        if need_shift:
            raise SingularParameterError("zero gain makes the shift parameter undefined")
        return 0.0, m_bar, s2_bar
    mu_bar = (theta.m * noise2 + theta.mu * s2_bar) / (gain * theta.sigma2)
    return mu_bar, m_bar, s2_bar


def gaussian_push_log_weights(i, theta, gain, noise2):
    """Log-weights ``log alpha_bar^(i)_k``, ``k = 0..i``, of the pushed mixture.

    ``alpha_bar_k = binom(i,k) noise2^(i-k) / B_i
    * sum_j binom(k,j) s^(2j) / (C_2j s2^j) * gain^(2(k-j)) s2^(k-j) / s2_bar^(i-j)``
    with ``s = mu + m`` and ``B_i = sum_k binom(i,k) s^(2k) / (C_2k s2^k)``.
    """
    if i == 0:
        return np.zeros(1)
    if gain == 0:
        raise SingularParameterError("zero gain with a component of index >= 1")
    s2 = theta.sigma2
    ss = (theta.mu + theta.m) ** 2
    s2_bar = noise2 + gain * gain * s2
    k = np.arange(i + 1)
    log_b = logsumexp(_log_binom(i, k) + xlogy(k, ss / s2) - log_abs_moment(2 * k))
    out = np.empty(i + 1)
    for kk in range(i + 1):
        j = np.arange(kk + 1)
        inner = (
            _log_binom(kk, j)
            + xlogy(j, ss / s2)
            - log_abs_moment(2 * j)
            + (kk - j) * np.log(gain * gain * s2)
            - (i - j) * np.log(s2_bar)
        )
        out[kk] = _log_binom(i, kk) + (i - kk) * np.log(noise2) - log_b + logsumexp(inner)
    return out


@dataclass(frozen=True)
class KalmanModel:
    """Scalar linear Gaussian model; registered under family ``KalmanExt``."""

    h: float
    gamma2: float
    a: float
    beta2: float

    tag = KALMAN
    delta = None

    def __post_init__(self):
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be positive")
        if not self.beta2 > 0:
            raise ValueError("beta2 must be positive")

    # -- raw densities ------------------------------------------------------
    def obs_logpdf(self, x, y):
        return _gaussian_logpdf(y, self.h * np.asarray(x), self.gamma2)

    def transition_logpdf(self, x, x_next):
        return _gaussian_logpdf(x_next, self.a * np.asarray(x), self.beta2)

    def component_logpdf(self, i, theta, x):
        return kalman_component_logpdf(i, theta, x)

    # -- conjugate maps -----------------------------------------------------
    def update_index(self, i, y):
        return i

    def update_theta(self, theta, y):
        return kalman_update_theta(theta, y, self.h, self.gamma2)

    def update_component(self, i, theta, y):
        return i, self.update_theta(theta, y)

    def predict_theta(self, theta):
        return KalmanTheta(*gaussian_push_theta(theta, self.a, self.beta2, need_shift=False))

    def predict_component(self, i, theta):
        """``(tau(theta), alpha_bar^(i))`` with ``alpha_bar`` of length ``i + 1``."""
        tau, lw = self.predict_component_log(i, theta)
        w = np.exp(lw)
        return tau, w / w.sum()

    def predict_component_log(self, i, theta):
        if i == 0:
            return self.predict_theta(theta), np.zeros(1)
        tau = KalmanTheta(*gaussian_push_theta(theta, self.a, self.beta2))
        lw = gaussian_push_log_weights(i, theta, self.a, self.beta2)
        return tau, lw - logsumexp(lw)

    def marginal_component(self, i, theta, y):
        """``log p_{nu^i_theta}(y)``: a length-``i`` mixture of the same class."""
        if i == 0:
            return _gaussian_logpdf(y, self.h * theta.m, self.gamma2 + self.h**2 * theta.sigma2)
        bar = KalmanTheta(*gaussian_push_theta(theta, self.h, self.gamma2))
        lw = gaussian_push_log_weights(i, theta, self.h, self.gamma2)
        comps = np.stack([kalman_component_logpdf(k, bar, y) for k in range(i + 1)])
        lw = lw.reshape((-1,) + (1,) * np.ndim(y))
        return logsumexp(lw + comps, axis=0)

    def component_marginal_logpdf(self, i, theta, y):
        return np.array([float(self.marginal_component(int(k), theta, y)) for k in np.atleast_1d(i)])

    def predict_dirac(self, x):
        return MixtureDistribution.single(KALMAN, KalmanTheta(0.0, self.a * x, self.beta2))

    def stationary(self):
        if not abs(self.a) < 1:
            raise ValueError("stationary law requires |a| < 1")
        return MixtureDistribution.single(KALMAN, KalmanTheta(0.0, 0.0, self.beta2 / (1 - self.a**2)))


def laplace_transform(i, theta, lam):
    """``E exp(lam X)`` for ``X ~ nu^i_theta``.

    ``C_2i(s + lam s2; s2) / C_2i(s; s2) * exp(lam m + lam^2 s2 / 2)``, s = m + mu.
    """
    s = theta.m + theta.mu
    s2 = theta.sigma2
    log_ratio = log_c2i_shifted(i, s + lam * s2, s2) - log_c2i_shifted(i, s, s2)
    return float(np.exp(log_ratio + lam * theta.m + 0.5 * lam * lam * s2))
