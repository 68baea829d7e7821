"""Brute-force reference filters used to validate the exact recursions.

Nothing here touches the conjugate update or prediction maps: the grid
filter only needs pointwise initial, transition and observation densities,
and the particle filter only needs samplers plus the observation density.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DegeneracyError, GridLeakageError
from .simulate import spawn_rngs

GL_ORDER = 16


@dataclass(frozen=True)
class GridSpec:
    """Quadrature window ``[lo, hi]`` with ``n_points`` nodes.

    ``rule`` is ``"gauss-legendre"`` (composite, 16 nodes per panel) or
    ``"trapezoid"``.  ``grading > 1`` places the nodes at
    ``lo + (hi - lo) s**grading`` for a uniform rule in ``s``, which clusters
    them at ``lo``; posteriors of positive states can spike there.
    """

    lo: float
    hi: float
    n_points: int
    rule: str = "gauss-legendre"
    grading: float = 1.0

    def __post_init__(self):
        problems = []
        if not self.lo < self.hi:
            problems.append("grid needs lo < hi")
        if self.n_points < 64:
            problems.append("grid needs n_points >= 64")
        if self.rule not in ("gauss-legendre", "trapezoid"):
            problems.append(f"unknown quadrature rule {self.rule!r}")
        elif self.rule == "gauss-legendre" and self.n_points % GL_ORDER:
            problems.append(f"gauss-legendre grids need n_points divisible by {GL_ORDER}")
        if not self.grading >= 1:
            problems.append("grid grading must be >= 1")
        if problems:
            raise ValueError("; ".join(problems))

    def nodes_weights(self):
        if self.grading == 1:
            return self._uniform(self.lo, self.hi)
        s, sw = self._uniform(0.0, 1.0)
        span = self.hi - self.lo
        x = self.lo + span * s**self.grading
        w = sw * span * self.grading * s ** (self.grading - 1)
        return x, w

    def _uniform(self, lo, hi):
        if self.rule == "trapezoid":
            x = np.linspace(lo, hi, self.n_points)
            w = np.full(self.n_points, x[1] - x[0])
            w[[0, -1]] *= 0.5
            return x, w
        t, tw = np.polynomial.legendre.leggauss(GL_ORDER)
        edges = np.linspace(lo, hi, self.n_points // GL_ORDER + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
        w = (half[:, None] * tw[None, :]).ravel()
        return x, w


@dataclass
class GridResult:
    nodes: np.ndarray
    weights: np.ndarray
    posteriors: list = field(default_factory=list)
    predictives: list = field(default_factory=list)
    log_marginals: list = field(default_factory=list)

    @property
    def loglik(self):
        return float(np.sum(self.log_marginals))

    def moments(self, step):
        p = self.posteriors[step]
        mean = float(np.sum(self.weights * p * self.nodes))
        second = float(np.sum(self.weights * p * self.nodes**2))
        return mean, second - mean * mean


def grid_filter(init_logpdf, transition_logpdf, obs_logpdf, grid, ys, leak_tol=1e-8):
    """Discretized Bayes recursion on a fixed quadrature grid.

    ``init_logpdf(x)``, ``transition_logpdf(x, x_next)`` (broadcasting) and
    ``obs_logpdf(x, y)`` are evaluated pointwise.  Raises
    :class:`GridLeakageError` when the window drops more than ``leak_tol``
    of any discretized distribution.
    """
    x, w = grid.nodes_weights()
    kernel = _kernel_matrix(transition_logpdf, x)
    prior = np.exp(init_logpdf(x))
    _check_mass(w, prior, leak_tol, "initial distribution")
    res = GridResult(x, w)
    for y in ys:
        ll = np.asarray(obs_logpdf(x, y), dtype=float)
        shift = np.max(ll)
        if not np.isfinite(shift):
            raise GridLeakageError(f"observation {y!r} has zero likelihood on the grid")
        joint = prior * np.exp(ll - shift)
        z = float(np.sum(w * joint))
        post = joint / z
        pred = kernel @ (w * post)
        _check_mass(w, pred, leak_tol, "predictive distribution")
        res.posteriors.append(post)
        res.predictives.append(pred)
        res.log_marginals.append(np.log(z) + shift)
        prior = pred
    return res


def _kernel_matrix(transition_logpdf, x, chunk=32):
    # [next, current]; built in column blocks to bound the series' memory use
    out = np.empty((x.size, x.size))
    for start in range(0, x.size, chunk):
        cur = x[start : start + chunk]
        out[:, start : start + chunk] = np.exp(transition_logpdf(cur[None, :], x[:, None]))
    return out


def _check_mass(w, density, tol, what):
    mass = float(np.sum(w * density))
    if abs(mass - 1.0) > tol:
        raise GridLeakageError(f"{what} keeps mass {mass!r} on the grid; widen or refine it")


@dataclass(frozen=True)
class ParticleCloud:
    particles: np.ndarray
    weights: np.ndarray

    @property
    def ess(self):
        return float(1.0 / np.sum(self.weights**2))


def systematic_resample(weights, rng):
    n = weights.size
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, positions, side="right")


@dataclass
class ParticleResult:
    """Per-replicate estimates; arrays are ``(replicates, steps)``."""

    means: np.ndarray
    variances: np.ndarray
    logliks: np.ndarray

    @property
    def replicates(self):
        return self.means.shape[0]

    def summary(self):
        r = self.replicates
        se = lambda a: a.std(axis=0, ddof=1) / np.sqrt(r) if r > 1 else np.full(a.shape[1:], np.nan)
        return {
            "mean": self.means.mean(axis=0),
            "mean_se": se(self.means),
            "var": self.variances.mean(axis=0),
            "var_se": se(self.variances),
            "loglik": float(self.logliks.mean()),
            "loglik_se": float(se(self.logliks[:, None])[0]),
        }


def _particle_run(sample_init, sample_step, obs_logpdf, n, ys, rng, ess_fraction):
    x = np.asarray(sample_init(n, rng), dtype=float)
    logw = np.full(n, -np.log(n))
    means, variances, loglik = [], [], 0.0
    for y in ys:
        lw = logw + obs_logpdf(x, y)
        inc = logsumexp(lw)
        if not np.isfinite(inc):
            raise DegeneracyError(f"all particle weights vanished at observation {y!r}")
        loglik += inc
        logw = lw - inc
        cloud = ParticleCloud(x, np.exp(logw))
        m = float(np.sum(cloud.weights * x))
        means.append(m)
        variances.append(float(np.sum(cloud.weights * (x - m) ** 2)))
        if cloud.ess < ess_fraction * n:
            x = x[systematic_resample(cloud.weights, rng)]
            logw = np.full(n, -np.log(n))
        x = sample_step(x, rng)
    return np.array(means), np.array(variances), loglik


def particle_filter(
    sample_init, sample_step, obs_logpdf, n_particles, ys, seed,
    replicates=1, ess_fraction=0.5, workers=1,
):
    """Bootstrap particle filter with systematic resampling.

    ``sample_init(n, rng)`` draws the initial cloud, ``sample_step(x, rng)``
    propagates it through the signal kernel.  Replicates use independent
    streams spawned from ``seed``.
    """
    if n_particles < 100:
        raise ValueError("n_particles must be >= 100")
    ys = list(ys)
    rngs = spawn_rngs(seed, replicates)
    job = lambda rng: _particle_run(sample_init, sample_step, obs_logpdf, n_particles, ys, rng, ess_fraction)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            runs = list(pool.map(job, rngs))
    else:
        runs = [job(rng) for rng in rngs]
    return ParticleResult(
        np.array([r[0] for r in runs]).reshape(replicates, len(ys)),
        np.array([r[1] for r in runs]).reshape(replicates, len(ys)),
        np.array([r[2] for r in runs]),
    )


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def exact_moments(dist):
    mean = dist.moment(1)
    return mean, dist.moment(2) - mean * mean


def compare(posteriors, log_marginals, oracle):
    """Report how far an exact filter run sits from an oracle run.

    ``posteriors`` are the exact per-step posterior mixtures.  For a
    :class:`GridResult` the report holds the sup-norm density gap and the
    moment and log-likelihood differences; for a :class:`ParticleResult` it
    holds differences and z-scores against the replicate standard errors.
    """
    exact = np.array([exact_moments(d) for d in posteriors]).reshape(-1, 2)
    loglik = float(np.sum(log_marginals))
    if isinstance(oracle, GridResult):
        grid_m = np.array([oracle.moments(k) for k in range(len(posteriors))]).reshape(-1, 2)
        sup = [
            float(np.max(np.abs(d.pdf(oracle.nodes) - p)))
            for d, p in zip(posteriors, oracle.posteriors)
        ]
        return {
            "kind": "grid",
            "sup_density_diff": max(sup, default=0.0),
            "sup_density_diff_per_step": sup,
            "max_mean_diff": float(np.max(np.abs(exact[:, 0] - grid_m[:, 0]), initial=0.0)),
            "max_var_diff": float(np.max(np.abs(exact[:, 1] - grid_m[:, 1]), initial=0.0)),
            "loglik_diff": loglik - oracle.loglik,
        }
    s = oracle.summary()
    z = lambda diff, se: np.divide(diff, se, out=np.zeros_like(diff), where=se > 0)
    dm = exact[:, 0] - s["mean"]
    dv = exact[:, 1] - s["var"]
    dl = np.array([loglik - s["loglik"]])
    zm, zv = z(dm, s["mean_se"]), z(dv, s["var_se"])
    zl = z(dl, np.array([s["loglik_se"]]))
    return {
        "kind": "particle",
        "max_mean_diff": float(np.max(np.abs(dm), initial=0.0)),
        "max_var_diff": float(np.max(np.abs(dv), initial=0.0)),
        "loglik_diff": float(dl[0]),
        "z_mean": zm.tolist(),
        "z_var": zv.tolist(),
        "z_loglik": float(zl[0]),
        "max_abs_z": float(max(np.max(np.abs(zm), initial=0.0), np.max(np.abs(zv), initial=0.0), abs(zl[0]))),
    }
