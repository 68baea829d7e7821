"""Exact samplers for the signals, the observation channels and the mixtures.

All randomness flows through :class:`numpy.random.Generator` backed by
``PCG64``; :data:`RNG_ALGORITHM` is written into every fixture so runs can be
reproduced elsewhere.  Independent streams are obtained with
``SeedSequence.spawn``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .model_derived import CHANNELS, INVERSE, POISSON, SQUARED_MULT, SV_DOUBLE_PRIME, SV_PRIME, CIRModel
from .model_kalman import KalmanModel
from .mixtures import GAMMA_CIR, KALMAN, RADIAL_OU, Dirac, log_abs_moment
from .model_radial_ou import RadialOUModel

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rngs(seed, n):
    """``n`` statistically independent generators derived from ``seed``."""
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_ar1_path(a, beta2, u0, n, rng):
    """``U_0 = u0`` and ``U_k = a U_{k-1} + beta eta_k`` for ``k = 1..n``."""
    if beta2 < 0:
        raise ValueError("beta2 must be >= 0")
    eta = rng.standard_normal(n)
    u = np.empty(n + 1)
    u[0] = u0
    beta = np.sqrt(beta2)
    for k in range(1, n + 1):
        u[k] = a * u[k - 1] + beta * eta[k - 1]
    return u


def sample_radial_ou_step(model, x, rng):
    """One exact transition: ``K ~ Poisson(a^2 x^2 / 2 beta^2)``, then
    ``sqrt(Gamma(K + delta/2, rate 1/(2 beta^2)))``.  Vectorized over ``x``."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(_cir_step(model.a, model.beta2, model.delta, x * x, rng))


def sample_cir_step(model, r, rng):
    return _cir_step(model.a, model.beta2, model.delta, np.asarray(r, dtype=float), rng)


def _cir_step(a, beta2, delta, r, rng):
    k = rng.poisson(a * a * r / (2.0 * beta2))
    # numpy's Gamma sampler handles shape < 1 (delta < 2, K = 0) exactly
    return rng.standard_gamma(k + 0.5 * delta) * (2.0 * beta2)


def sample_kalman_step(model, x, rng):
    x = np.asarray(x, dtype=float)
    return model.a * x + np.sqrt(model.beta2) * rng.standard_normal(x.shape)


def sample_observation(channel, state, lam, rng, h=None, gamma2=None):
    """Draw observations given the hidden state (vectorized over ``state``).

    ``channel`` is ``"Gaussian"`` (needs ``h`` and ``gamma2``),
    ``"Multiplicative"`` (``y = x / sqrt(G)``) or one of the CIR channels.
    """
    state = np.asarray(state, dtype=float)
    shape = state.shape
    if channel == "Gaussian":
        return h * state + np.sqrt(gamma2) * rng.standard_normal(shape)
    if channel == POISSON:
        return rng.poisson(lam * state).astype(float)
    g = rng.exponential(1.0 / lam, size=shape)
    if channel == "Multiplicative":
        return state / np.sqrt(g)
    if channel == SQUARED_MULT:
        return state / g
    if channel == INVERSE:
        return g / state
    sign = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    if channel == SV_PRIME:
        return sign * np.sqrt(state / g)
    if channel == SV_DOUBLE_PRIME:
        return sign * np.sqrt(g / state)
    raise ValueError(f"unknown channel {channel!r}")


def observation_channel(model):
    if isinstance(model, KalmanModel):
        return "Gaussian"
    if isinstance(model, RadialOUModel):
        return "Multiplicative"
    if isinstance(model, CIRModel):
        return model.channel
    raise TypeError(f"unsupported model {type(model).__name__}")


def sample_observations(model, states, rng):
    if isinstance(model, KalmanModel):
        return sample_observation("Gaussian", states, None, rng, h=model.h, gamma2=model.gamma2)
    return sample_observation(observation_channel(model), states, model.lambda_noise, rng)


def sample_step(model, state, rng):
    if isinstance(model, KalmanModel):
        return sample_kalman_step(model, state, rng)
    if isinstance(model, RadialOUModel):
        return sample_radial_ou_step(model, state, rng)
    if isinstance(model, CIRModel):
        return sample_cir_step(model, state, rng)
    raise TypeError(f"unsupported model {type(model).__name__}")


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------

def sample_kalman_component(i, theta, n, rng):
    """Exact draws from ``nu^i_(mu, m, s2)``.

    With ``u = x + mu`` and ``s = m + mu`` the density of ``|u|`` is
    ``∝ |u|^(2i) e^(-u^2 / 2 s2) cosh(|u| s / s2)``.  Expanding the cosh gives
    a mixture over ``k`` of ``sqrt(Gamma(i + k + 1/2, 1/(2 s2)))`` with
    weights ``∝ (s^2 / s2)^k C_{2(i+k)} / (2k)!``; the sign of ``u`` is then
    ``+`` with probability ``e^(|u| s / s2) / (2 cosh(|u| s / s2))``.
    """
    s = theta.m + theta.mu
    s2 = theta.sigma2
    c = s * s / s2
    if c > 0:
        kmax = int(c + 40 * np.sqrt(c + 1) + 40)
        k = np.arange(kmax + 1)
        logw = k * np.log(c) + log_abs_moment(2 * (i + k)) - gammaln(2.0 * k + 1.0)
        w = np.exp(logw - logw.max())
        comp = rng.choice(k, size=n, p=w / w.sum())
    else:
        comp = np.zeros(n, dtype=int)
    r = np.sqrt(rng.standard_gamma(i + comp + 0.5) * 2.0 * s2)
    z = r * s / s2
    p_pos = 0.5 * (1.0 + np.tanh(z))
    sign = np.where(rng.random(n) < p_pos, 1.0, -1.0)
    return sign * r - theta.mu


def sample_component(family, i, theta, n, rng, delta=None):
    if family == KALMAN:
        return sample_kalman_component(i, theta, n, rng)
    g = rng.standard_gamma(i + 0.5 * delta, size=n) * 2.0 * theta.sigma**2
    if family == RADIAL_OU:
        return np.sqrt(g)
    if family == GAMMA_CIR:
        return g
    raise ValueError(f"unknown family {family!r}")


def sample_mixture(dist, n, rng):
    """``n`` independent draws from a mixture or a point mass."""
    if isinstance(dist, Dirac):
        return np.full(n, float(dist.x))
    idx = rng.choice(dist.weights.size, size=n, p=dist.weights)
    out = np.empty(n)
    for i in np.unique(idx):
        sel = idx == i
        out[sel] = sample_component(dist.family, int(i), dist.theta, int(sel.sum()), rng, dist.delta)
    return out


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """``init`` is ``"stationary"``, a :class:`Dirac` or a mixture."""

    model: KalmanModel | RadialOUModel | CIRModel
    n_steps: int
    seed: int
    init: object = "stationary"

    def __post_init__(self):
        if self.n_steps < 0:
            raise ValueError("n_steps must be >= 0")


def initial_distribution(model, init):
    if isinstance(init, str):
        if init != "stationary":
            raise ValueError(f"unknown init {init!r}")
        return model.stationary()
    return init


@dataclass(frozen=True)
class SimulatedPath:
    states: np.ndarray
    observations: np.ndarray
    seed: int
    rng_algorithm: str = RNG_ALGORITHM


def simulate(config):
    """Hidden states ``x_0..x_{N-1}`` and observations ``y_0..y_{N-1}``."""
    rng = make_rng(config.seed)
    model = config.model
    n = config.n_steps
    states = np.empty(n)
    if n:
        dist = initial_distribution(model, config.init)
        states[0] = sample_mixture(dist, 1, rng)[0]
        for k in range(1, n):
            states[k] = sample_step(model, states[k - 1], rng)
    obs = np.asarray(sample_observations(model, states, rng), dtype=float)
    return SimulatedPath(states, obs, config.seed)


__all__ = [
    "CHANNELS",
    "RNG_ALGORITHM",
    "SimConfig",
    "SimulatedPath",
    "initial_distribution",
    "make_rng",
    "sample_ar1_path",
    "sample_cir_step",
    "sample_component",
    "sample_kalman_component",
    "sample_mixture",
    "sample_observation",
    "sample_observations",
    "sample_radial_ou_step",
    "sample_step",
    "simulate",
    "spawn_rngs",
]
