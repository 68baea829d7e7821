"""Batch experiment runner.

``conjfilter simulate|filter|loglik|validate --config PATH [--fixture PATH]
[--out PATH] [--seed N] [--prune EPS]``

Configs are JSON documents with an explicit ``schema_version``.  Fixtures and
traces are CSV files with a JSON metadata sidecar (``<file>.meta.json``).
Floats are written with ``repr`` so every value round-trips exactly.

Exit codes: 0 ok, 2 config error, 3 numeric error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model_derived import CHANNELS, CIRModel
from .engine import run_filter
from .errors import ConfigError, FilterError
from .model_kalman import KalmanModel
from .mixtures import FAMILIES, GAMMA_CIR, KALMAN, RADIAL_OU, Dirac, KalmanTheta, MixtureDistribution, ScaleTheta
from .oracle import GridSpec, compare, grid_filter, particle_filter
from .model_radial_ou import RadialOUModel, derive_discrete
from .simulate import RNG_ALGORITHM, SimConfig, sample_mixture, sample_step, simulate

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
GAUSSIAN, MULTIPLICATIVE = "Gaussian", "Multiplicative"
DEFAULT_CHANNEL = {KALMAN: GAUSSIAN, RADIAL_OU: MULTIPLICATIVE, GAMMA_CIR: CHANNELS[0]}
ALLOWED_CHANNELS = {KALMAN: (GAUSSIAN,), RADIAL_OU: (MULTIPLICATIVE,), GAMMA_CIR: CHANNELS}
GRID_TOL = 1e-6
Z_TOL = 3.0


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    model: KalmanModel | RadialOUModel | CIRModel
    model_block: dict
    channel: str
    init: object
    init_block: dict
    n_steps: int
    seed: int
    prune_threshold: float
    oracle: dict
    outputs: dict

    @property
    def family(self):
        return self.model.tag


def _number(block, key, problems, where, positive=False, required=True, integer=False):
    if key not in block:
        if required:
            problems.append(f"{where}.{key} is required")
        return None
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        problems.append(f"{where}.{key} must be a finite number")
        return None
    if integer and v != int(v):
        problems.append(f"{where}.{key} must be an integer")
        return None
    if positive and not v > 0:
        problems.append(f"{where}.{key} must be positive")
        return None
    return int(v) if integer else float(v)


def _model_from_block(block, channel, problems):
    n_before = len(problems)
    family = block.get("family")
    if family not in FAMILIES:
        problems.append(f"model.family must be one of {FAMILIES}, got {family!r}")
        return None
    theta = _number(block, "theta_drift", problems, "model")
    sigma = _number(block, "sigma_diff", problems, "model", positive=True)
    Delta = _number(block, "Delta", problems, "model", positive=True)
    if channel not in ALLOWED_CHANNELS[family]:
        problems.append(f"channel {channel!r} is not registered for {family}; use one of {ALLOWED_CHANNELS[family]}")
    if family == KALMAN:
        h = _number(block, "h", problems, "model")
        gamma = _number(block, "gamma", problems, "model", positive=True)
        if None in (theta, sigma, Delta, h, gamma) or len(problems) > n_before:
            return None
        a, beta2 = derive_discrete(theta, sigma, Delta)
        return KalmanModel(h=h, gamma2=gamma * gamma, a=a, beta2=beta2)
    delta = _number(block, "delta", problems, "model")
    lam = _number(block, "lambda", problems, "model", positive=True)
    if delta is not None and not delta >= 1:
        problems.append("model.delta must be >= 1")
        delta = None
    if None in (theta, sigma, Delta, delta, lam) or len(problems) > n_before:
        return None
    try:
        if family == RADIAL_OU:
            return RadialOUModel(theta, sigma, delta, Delta, lam)
        return CIRModel(theta, sigma, delta, Delta, lam, channel)
    except ValueError as exc:
        problems.extend(f"model: {p}" for p in str(exc).split("; "))
        return None


def _init_from_block(block, model, problems):
    kind = block.get("kind", "stationary")
    if kind == "stationary":
        if model is None:
            return None
        try:
            return model.stationary()
        except ValueError as exc:
            problems.append(f"init.kind 'stationary': {exc}")
            return None
    if kind == "dirac":
        x = _number(block, "x", problems, "init")
        if x is not None and model is not None and model.tag != KALMAN and not x > 0:
            problems.append("init.x must be positive for this family")
        return None if x is None else Dirac(x)
    if kind == "mixture":
        weights = block.get("weights")
        if not isinstance(weights, list) or not weights or not all(
            isinstance(w, (int, float)) and w >= 0 for w in weights
        ) or not sum(weights) > 0:
            problems.append("init.weights must be a nonempty list of nonnegative numbers with positive sum")
            weights = None
        if model is None:
            return None
        if model.tag == KALMAN:
            mu = _number(block, "mu", problems, "init")
            m = _number(block, "m", problems, "init")
            s2 = _number(block, "sigma2", problems, "init", positive=True)
            if None in (mu, m, s2, weights):
                return None
            return MixtureDistribution.from_weights(KALMAN, KalmanTheta(mu, m, s2), weights)
        sigma = _number(block, "sigma", problems, "init", positive=True)
        if None in (sigma, weights):
            return None
        return MixtureDistribution.from_weights(model.tag, ScaleTheta(sigma), weights, model.delta)
    problems.append(f"init.kind must be 'stationary', 'dirac' or 'mixture', got {kind!r}")
    return None


def _check_oracle(block, problems):
    if not isinstance(block, dict):
        problems.append("oracle must be an object")
        return
    grid = block.get("grid")
    if grid is not None:
        if not isinstance(grid, dict):
            problems.append("oracle.grid must be an object")
        else:
            lo = _number(grid, "lo", problems, "oracle.grid")
            hi = _number(grid, "hi", problems, "oracle.grid")
            n = _number(grid, "n_points", problems, "oracle.grid", positive=True, integer=True)
            grading = _number(grid, "grading", problems, "oracle.grid", required=False)
            if None not in (lo, hi, n):
                try:
                    GridSpec(lo, hi, n, grid.get("rule", "gauss-legendre"), 1.0 if grading is None else grading)
                except ValueError as exc:
                    problems.extend(f"oracle.grid: {p}" for p in str(exc).split("; "))
    if "particles" in block:
        n = _number(block, "particles", problems, "oracle", positive=True, integer=True)
        if n is not None and n < 100:
            problems.append("oracle.particles must be >= 100")
    for key in ("replicates", "workers"):
        if key in block:
            _number(block, key, problems, "oracle", positive=True, integer=True)
    if "replicates" in block and block["replicates"] == 1:
        problems.append("oracle.replicates must be >= 2 so standard errors exist")


def parse_config(raw):
    """Validate a config mapping; raises :class:`ConfigError` listing every problem."""
    problems = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        problems.append(f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}")
    block = raw.get("model")
    model = None
    channel = None
    if not isinstance(block, dict):
        problems.append("model block is required")
        block = {}
    else:
        channel = raw.get("channel", DEFAULT_CHANNEL.get(block.get("family")))
        model = _model_from_block(block, channel, problems)
    init_block = raw.get("init", {"kind": "stationary"})
    if not isinstance(init_block, dict):
        problems.append("init must be an object")
        init, init_block = None, {}
    else:
        init = _init_from_block(init_block, model, problems)
    n_steps = _number(raw, "n_steps", problems, "config", integer=True)
    if n_steps is not None and n_steps < 0:
        problems.append("config.n_steps must be >= 0")
    seed = _number(raw, "seed", problems, "config", integer=True)
    if seed is not None and not 0 <= seed < 2**64:
        problems.append("config.seed must be a 64-bit unsigned integer")
    prune = _number(raw, "prune_threshold", problems, "config", required=False)
    if prune is not None and not 0 <= prune < 1:
        problems.append("config.prune_threshold must lie in [0, 1)")
    oracle = raw.get("oracle", {})
    _check_oracle(oracle, problems)
    outputs = raw.get("outputs", {})
    if not isinstance(outputs, dict) or not all(isinstance(v, str) for v in outputs.values()):
        problems.append("outputs must map names to path strings")
        outputs = {}
    known = {"schema_version", "model", "channel", "init", "n_steps", "seed", "prune_threshold", "oracle", "outputs"}
    problems.extend(f"unknown config key {k!r}" for k in sorted(set(raw) - known))
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        model, dict(block), channel, init, dict(init_block), n_steps, seed,
        prune or 0.0, oracle, outputs,
    )


def load_config(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise _IOFailure(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)


class _IOFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    try:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from exc


def sidecar_path(path):
    return Path(str(path) + ".meta.json")


def _model_meta(cfg):
    meta = {"family": cfg.family, "channel": cfg.channel, "block": cfg.model_block}
    if cfg.family == KALMAN:
        meta["derived"] = {"a": cfg.model.a, "beta2": cfg.model.beta2, "gamma2": cfg.model.gamma2}
    else:
        meta["derived"] = {"a": cfg.model.a, "beta2": cfg.model.beta2}
        if cfg.model.theta_drift < 0:
            meta["derived"]["rho2"] = cfg.model.rho2
    return meta


def _meta(cfg, kind, seed, **extra):
    out = {
        "kind": kind,
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "rng_algorithm": RNG_ALGORITHM,
        "model": _model_meta(cfg),
        "init": cfg.init_block,
    }
    out.update(extra)
    return out


def fixture_text(states, observations):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", "state", "observation"])
    for k, (x, y) in enumerate(zip(states, observations)):
        w.writerow([k, _fmt(x), _fmt(y)])
    return buf.getvalue()


def read_fixture(path):
    """Return ``(states, observations, meta)``; ``meta`` is ``None`` without a sidecar."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        side = sidecar_path(path)
        meta = json.loads(side.read_text()) if side.exists() else None
    except OSError as exc:
        raise _IOFailure(f"cannot read fixture {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _IOFailure(f"fixture sidecar for {path} is not valid JSON: {exc}") from exc
    try:
        states = np.array([float(r["state"]) for r in rows])
        obs = np.array([float(r["observation"]) for r in rows])
    except (KeyError, ValueError, TypeError) as exc:
        raise _IOFailure(f"fixture {path} is malformed: {exc}") from exc
    return states, obs, meta


def theta_fields(family):
    return ("mu", "m", "sigma2") if family == KALMAN else ("sigma",)


def trace_text(trace, family):
    fields = theta_fields(family)
    posts = trace.posteriors
    width = max((p.log_weights.size for p in posts if isinstance(p, MixtureDistribution)), default=1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["step", *fields, *(f"weight_{k}" for k in range(width)), "mixture_length", "log_marginal", "cum_loglik"])
    cum = 0.0
    for k, step in enumerate(trace.steps):
        cum += step.log_marginal
        post = step.posterior
        if isinstance(post, Dirac):
            # the observation of a point mass leaves it unchanged
            theta = ["nan"] * len(fields)
            weights = ["nan"] * width
            length = 0
        else:
            theta = [_fmt(getattr(post.theta, f)) for f in fields]
            wv = post.weights
            weights = [_fmt(wv[j]) if j < wv.size else _fmt(0.0) for j in range(width)]
            length = post.length
        w.writerow([k, *theta, *weights, length, _fmt(step.log_marginal), _fmt(cum)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _output_path(cfg, args, key, default):
    if args.out:
        return Path(args.out)
    return Path(cfg.outputs.get(key, default))


def _seed(cfg, args):
    return args.seed if args.seed is not None else cfg.seed


def _prune(cfg, args):
    return args.prune if args.prune is not None else cfg.prune_threshold


def _observations(cfg, args):
    if not args.fixture:
        raise ConfigError("--fixture is required for this command")
    states, ys, meta = read_fixture(args.fixture)
    if meta is not None:
        problems = []
        fam = meta.get("model", {}).get("family")
        chan = meta.get("model", {}).get("channel")
        if fam != cfg.family:
            problems.append(f"fixture family {fam!r} differs from config family {cfg.family!r}")
        if chan != cfg.channel:
            problems.append(f"fixture channel {chan!r} differs from config channel {cfg.channel!r}")
        if problems:
            raise ConfigError(problems)
    return states, ys, meta


def cmd_simulate(cfg, args):
    seed = _seed(cfg, args)
    path = simulate(SimConfig(cfg.model, cfg.n_steps, seed, cfg.init))
    out = _output_path(cfg, args, "fixture", "fixture.csv")
    _write(out, fixture_text(path.states, path.observations))
    _write(sidecar_path(out), _dump_json(_meta(cfg, "fixture", seed, n_steps=cfg.n_steps)))
    return out


def cmd_filter(cfg, args):
    _, ys, meta = _observations(cfg, args)
    prune = _prune(cfg, args)
    trace = run_filter(cfg.model, cfg.init, ys, prune)
    out = _output_path(cfg, args, "trace", "trace.csv")
    _write(out, trace_text(trace, cfg.family))
    seed = meta.get("seed") if meta else None
    _write(sidecar_path(out), _dump_json(_meta(
        cfg, "trace", seed, fixture=str(args.fixture), prune_threshold=prune,
        n_obs=len(ys), theta_fields=list(theta_fields(cfg.family)),
    )))
    return out


def cmd_loglik(cfg, args):
    _, ys, meta = _observations(cfg, args)
    prune = _prune(cfg, args)
    trace = run_filter(cfg.model, cfg.init, ys, prune)
    report = {
        "kind": "loglik",
        "schema_version": SCHEMA_VERSION,
        "family": cfg.family,
        "channel": cfg.channel,
        "fixture": str(args.fixture),
        "fixture_seed": meta.get("seed") if meta else None,
        "n_obs": len(ys),
        "prune_threshold": prune,
        "loglik": trace.total_loglik,
        "final_mixture_length": trace.posteriors[-1].length if len(ys) and not isinstance(trace.posteriors[-1], Dirac) else None,
    }
    out = _output_path(cfg, args, "report", "loglik.json")
    _write(out, _dump_json(report))
    return out


def _grid_run(cfg, ys):
    g = cfg.oracle["grid"]
    spec = GridSpec(g["lo"], g["hi"], int(g["n_points"]), g.get("rule", "gauss-legendre"), g.get("grading", 1.0))
    model = cfg.model
    if isinstance(cfg.init, Dirac):
        # the first update of a point mass only contributes f_x0(y_0)
        x0 = cfg.init.x
        first = float(model.obs_logpdf(x0, ys[0]))
        res = grid_filter(lambda x: model.transition_logpdf(x0, x), model.transition_logpdf, model.obs_logpdf, spec, ys[1:])
        return res, first
    return grid_filter(cfg.init.logpdf, model.transition_logpdf, model.obs_logpdf, spec, ys), 0.0


def _particle_run(cfg, ys, seed):
    model = cfg.model
    init = cfg.init
    if isinstance(init, Dirac):
        sample_init = lambda n, rng: np.full(n, float(init.x))
    else:
        sample_init = lambda n, rng: sample_mixture(init, n, rng)
    return particle_filter(
        sample_init,
        lambda x, rng: sample_step(model, x, rng),
        model.obs_logpdf,
        int(cfg.oracle.get("particles", 100_000)),
        ys,
        seed,
        replicates=int(cfg.oracle.get("replicates", 20)),
        workers=int(cfg.oracle.get("workers", 1)),
    )


def cmd_validate(cfg, args):
    _, ys, meta = _observations(cfg, args)
    if not len(ys):
        raise ConfigError("validate needs a fixture with at least one observation")
    seed = _seed(cfg, args)
    trace = run_filter(cfg.model, cfg.init, ys)
    report = {
        "kind": "validate",
        "schema_version": SCHEMA_VERSION,
        "family": cfg.family,
        "channel": cfg.channel,
        "fixture": str(args.fixture),
        "n_obs": len(ys),
        "exact_loglik": trace.total_loglik,
        "seed": seed,
        "rng_algorithm": RNG_ALGORITHM,
    }
    passed = True
    if "grid" in cfg.oracle:
        res, offset = _grid_run(cfg, ys)
        posts = trace.posteriors[1:] if offset else trace.posteriors
        margs = trace.log_marginals[1:] if offset else trace.log_marginals
        rep = compare(posts, margs, res)
        rep.pop("sup_density_diff_per_step")
        rep["passed"] = bool(rep["sup_density_diff"] < GRID_TOL and abs(rep["loglik_diff"]) < GRID_TOL)
        passed &= rep["passed"]
        report["grid"] = rep
    if cfg.oracle.get("particles", 0):
        res = _particle_run(cfg, ys, seed)
        rep = compare(trace.posteriors, trace.log_marginals, res)
        rep["particles"] = int(cfg.oracle["particles"])
        rep["replicates"] = res.replicates
        rep["passed"] = bool(rep["max_abs_z"] < Z_TOL)
        passed &= rep["passed"]
        report["particle"] = rep
    if "grid" not in report and "particle" not in report:
        raise ConfigError("validate needs oracle.grid and/or oracle.particles in the config")
    report["passed"] = bool(passed)
    out = _output_path(cfg, args, "report", "validate.json")
    _write(out, _dump_json(report))
    return out


COMMANDS = {"simulate": cmd_simulate, "filter": cmd_filter, "loglik": cmd_loglik, "validate": cmd_validate}


def build_parser():
    p = argparse.ArgumentParser(prog="conjfilter", description="Exact mixture filters: simulate, filter, likelihood, validation.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--fixture", help="fixture CSV (filter, loglik, validate)")
    p.add_argument("--out", help="output path, overriding the config's outputs block")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--prune", type=float, help="drop mixture weights below EPS (0 keeps the filter exact)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.prune is not None and not 0 <= args.prune < 1:
            raise ConfigError("--prune must lie in [0, 1)")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
        cfg = load_config(args.config)
        out = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except _IOFailure as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FilterError, FloatingPointError, ValueError) as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(out)
    return EXIT_OK
