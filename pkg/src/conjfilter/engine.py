"""Generic update / prediction recursion for conjugate mixture classes.

A *family* is any object exposing

``tag`` and ``delta``
    identifying the :class:`MixtureDistribution` family it acts on;
``update_index(i, y)``
    the one-to-one index map ``t_y`` (vectorized over ``i``);
``update_theta(theta, y)``
    the structural update ``T_y(theta)``;
``component_marginal_logpdf(i, theta, y)``
    ``log p_{nu^i_theta}(y)``, vectorized over ``i``;
``predict_theta(theta)`` and ``predict_component_log(i, theta)``
    ``tau(theta)`` and the finite weight vector ``alpha^(i, theta)`` in logs;
``obs_logpdf(x, y)`` and ``predict_dirac(x)``
    needed only when the recursion starts from a point mass.

The update of a mixture reweights each component by its marginal likelihood
and relabels it with ``t_y``; the prediction mixes the per-component weight
vectors.  Both only touch the structural parameter through ``theta``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ImpossibleObservationError
from .mixtures import Dirac, MixtureDistribution, prune_log_weights


def _check_family(family, dist):
    if dist.family != family.tag:
        raise ValueError(f"distribution of family {dist.family} given to {family.tag} model")
    if family.delta is not None and dist.delta != family.delta:
        raise ValueError(f"delta mismatch: {dist.delta} vs {family.delta}")


def update(family, dist, y, prune=0.0):
    """Bayes update of ``dist`` by observation ``y``.

    Returns ``(posterior, log p_dist(y))``.  A point mass is returned
    unchanged together with ``log f_x(y)``.
    """
    if isinstance(dist, Dirac):
        ll = float(family.obs_logpdf(dist.x, y))
        if not np.isfinite(ll):
            raise ImpossibleObservationError(y)
        return dist, ll
    _check_family(family, dist)
    idx = np.arange(dist.log_weights.size)
    live = np.isfinite(dist.log_weights)
    marg = np.full(idx.size, -np.inf)
    marg[live] = family.component_marginal_logpdf(idx[live], dist.theta, y)
    joint = dist.log_weights + marg
    log_marginal = float(logsumexp(joint)) if np.any(np.isfinite(joint)) else -np.inf
    if not np.isfinite(log_marginal):
        raise ImpossibleObservationError(y)
    new_idx = np.asarray(family.update_index(idx, y), dtype=int)
    out = np.full(int(new_idx.max()) + 1, -np.inf)
    out[new_idx] = joint - log_marginal
    out = prune_log_weights(out, prune)
    theta = family.update_theta(dist.theta, y)
    return MixtureDistribution(dist.family, theta, out, dist.delta), log_marginal


def predict(family, dist, prune=0.0):
    """Push ``dist`` through the transition kernel of the hidden chain."""
    if isinstance(dist, Dirac):
        return family.predict_dirac(dist.x)
    _check_family(family, dist)
    live = np.flatnonzero(np.isfinite(dist.log_weights))
    tau = family.predict_theta(dist.theta)
    rows = [np.asarray(family.predict_component_log(int(i), dist.theta)[1]) for i in live]
    width = max(r.size for r in rows)
    out = np.full(width, -np.inf)
    for i, row in zip(live, rows):
        out[: row.size] = np.logaddexp(out[: row.size], dist.log_weights[i] + row)
    out = prune_log_weights(out, prune)
    return MixtureDistribution(dist.family, tau, out, dist.delta)


@dataclass(frozen=True)
class FilterStep:
    """One recursion step: ``posterior`` is the law of x_n given y_0..y_n and
    ``predictive`` the law of x_{n+1} given the same observations."""

    prior: MixtureDistribution | Dirac
    posterior: MixtureDistribution | Dirac
    predictive: MixtureDistribution
    log_marginal: float


@dataclass
class FilterTrace:
    init: MixtureDistribution | Dirac
    steps: list = field(default_factory=list)

    @property
    def total_loglik(self):
        return float(sum(s.log_marginal for s in self.steps))

    @property
    def log_marginals(self):
        return np.array([s.log_marginal for s in self.steps])

    @property
    def posteriors(self):
        return [s.posterior for s in self.steps]

    @property
    def predictives(self):
        return [s.predictive for s in self.steps]


def run_filter(family, init, ys, prune=0.0):
    """Alternate update and prediction over the observation series ``ys``."""
    trace = FilterTrace(init)
    prior = init
    for y in ys:
        post, ll = update(family, prior, y, prune)
        pred = predict(family, post, prune)
        trace.steps.append(FilterStep(prior, post, pred, ll))
        prior = pred
    return trace


def log_likelihood(family, init, ys, prune=0.0):
    """Exact log density of the observation series."""
    return run_filter(family, init, ys, prune).total_loglik
