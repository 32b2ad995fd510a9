"""Turn an ExperimentConfig into data, a target model, a schedule and metric curves."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ..engine import BatchSampler, Chebyshev, Fixed, Learned, RmsProp, fresh, run
from ..errors import ConfigError
from ..particles import derive_seed, init_particles, rng_for
from ..targets import BayesLogRegModel, BayesNNModel, GaussianMixture1D
from ..trainer import (
    TrainResult,
    TrainSettings,
    UnfoldedTask,
    cross_entropy,
    mmd,
    train,
)
from .config import ExperimentConfig, format_config, read_kv, write_kv
from .data import (
    covertype_like,
    parse_csv_regression,
    parse_libsvm,
    sine_regression,
    split,
    standardize,
)
from .metrics import MetricCurve, accuracy

log = logging.getLogger(__name__)

MMD_BANDWIDTH = 2.0  # k'(x, x') = exp(-|x - x'|^2 / 2)


@dataclass
class Problem:
    model: object
    metric_name: str
    metric: Callable[[np.ndarray], float]
    train_loss: Callable[[np.ndarray, np.random.Generator], float]
    score_batch: int | None = None
    info: dict = field(default_factory=dict)


def _mixture_problem(cfg: ExperimentConfig) -> Problem:
    model = GaussianMixture1D()
    seed = cfg.run.seed
    samples = model.sample(rng_for(seed, "data"), cfg.data.n_samples)
    tr, te = split(len(samples), cfg.data.train_frac, rng_for(seed, "split"))
    train_set, test_set = samples[tr], samples[te]
    ref_size = min(cfg.train.ref_size, len(train_set))

    def train_loss(P, rng):
        ref = train_set[rng.choice(len(train_set), ref_size, replace=False)]
        return mmd(P, ref, MMD_BANDWIDTH)

    return Problem(model, "mmd", lambda P: mmd(P, test_set, MMD_BANDWIDTH), train_loss,
                   info={"train": train_set, "test": test_set})


def _subsample(n, size, seed):
    if size and size < n:
        return np.sort(rng_for(seed, "subsample").choice(n, size, replace=False))
    return np.arange(n)


def _loss_subset(n, size, rng):
    """Training points scored by one loss evaluation (all of them if ``size`` is 0)."""
    if size and size < n:
        return rng.choice(n, size, replace=False)
    return slice(None)


def _logreg_problem(cfg: ExperimentConfig) -> Problem:
    seed = cfg.run.seed
    if cfg.data.format == "libsvm":
        X, t = parse_libsvm(cfg.data.path, cfg.data.n_features or None)
    elif cfg.data.format == "synthetic":
        X, t = covertype_like(cfg.data.n_samples, rng_for(seed, "data"))
    else:
        raise ConfigError(f"logreg cannot read data.format={cfg.data.format!r}")
    keep = _subsample(len(X), cfg.data.subsample, seed)
    X, t = X[keep], t[keep]
    tr, te = split(len(X), cfg.data.train_frac, rng_for(seed, "split"))
    X_tr, X_te = X[tr], X[te]
    if cfg.data.standardize:
        X_tr, X_te, _, _ = standardize(X_tr, X_te)
    if cfg.data.bias:
        X_tr = np.column_stack([X_tr, np.ones(len(X_tr))])
        X_te = np.column_stack([X_te, np.ones(len(X_te))])
    t_tr, t_te = t[tr], t[te]
    model = BayesLogRegModel(X_tr, t_tr, a=cfg.model.a, b=cfg.model.b)
    t01 = (t_tr + 1) / 2

    def metric(P):
        pred = np.where(model.predict_proba(P, X_te) >= 0.5, 1, -1)
        return accuracy(t_te, pred)

    def train_loss(P, rng):
        idx = _loss_subset(len(X_tr), cfg.train.loss_points, rng)
        return cross_entropy(t01[idx], model.predict_proba(P, X_tr[idx]))

    return Problem(model, "accuracy", metric, train_loss, cfg.model.score_batch,
                   info={"X_test": X_te, "t_test": t_te})


def _bnn_problem(cfg: ExperimentConfig) -> Problem:
    seed = cfg.run.seed
    if cfg.data.format == "csv":
        X, y = parse_csv_regression(cfg.data.path, cfg.data.target_col, cfg.data.header, bias=False)
    elif cfg.data.format == "synthetic":
        X, y = sine_regression(cfg.data.n_samples, rng_for(seed, "data"), cfg.data.n_features or 13)
    else:
        raise ConfigError(f"bnn cannot read data.format={cfg.data.format!r}")
    keep = _subsample(len(X), cfg.data.subsample, seed)
    X, y = X[keep], y[keep]
    tr, te = split(len(X), cfg.data.train_frac, rng_for(seed, "split"))
    X_tr, X_te, y_tr, y_te = X[tr], X[te], y[tr], y[te]
    y_mean, y_std = 0.0, 1.0
    if cfg.data.standardize:
        X_tr, X_te, _, _ = standardize(X_tr, X_te)
        y_mean, y_std = float(y_tr.mean()), float(y_tr.std()) or 1.0
    if cfg.data.bias:
        X_tr = np.column_stack([X_tr, np.ones(len(X_tr))])
        X_te = np.column_stack([X_te, np.ones(len(X_te))])
    ys_tr = (y_tr - y_mean) / y_std
    model = BayesNNModel(X_tr, ys_tr, hidden=cfg.model.hidden, a_lambda=cfg.model.a, b_lambda=cfg.model.b,
                         a_gamma=cfg.model.a, b_gamma=cfg.model.b, init=cfg.model.init)

    def metric(P):
        pred = model.predict(P, X_te) * y_std + y_mean
        return float(np.sqrt(np.mean((pred - y_te) ** 2)))

    def train_loss(P, rng):
        idx = _loss_subset(len(X_tr), cfg.train.loss_points, rng)
        return float(np.mean((model.predict(P, X_tr[idx]) - ys_tr[idx]) ** 2))

    return Problem(model, "rmse", metric, train_loss, cfg.model.score_batch,
                   info={"y_mean": y_mean, "y_std": y_std})


def build_problem(cfg: ExperimentConfig) -> Problem:
    builders = {"mixture": _mixture_problem, "logreg": _logreg_problem, "bnn": _bnn_problem}
    return builders[cfg.task](cfg)


def build_task(cfg: ExperimentConfig, problem: Problem, variant=None) -> UnfoldedTask:
    return UnfoldedTask(problem.model, cfg.model.n_particles, problem.train_loss, cfg.train.T,
                        variant or cfg.variant, problem.score_batch, cfg.schedule.reverse)


def train_settings(cfg: ExperimentConfig) -> TrainSettings:
    t = cfg.train
    return TrainSettings(t.T, t.epochs, t.batch, t.lr, t.init_eps, t.init_alpha, t.init_beta,
                         derive_seed(cfg.run.seed, "train"))


# ---------------------------------------------------------------------------
# schedules


def write_schedule(path, schedule):
    if isinstance(schedule, Learned):
        write_kv(path, {"kind": "learned", "T": schedule.T, "eps": list(schedule.eps)})
    elif isinstance(schedule, Chebyshev):
        write_kv(path, {"kind": "chebyshev", "T": schedule.T, "alpha": float(schedule.alpha),
                        "beta": float(schedule.beta), "reverse": schedule.reverse,
                        "eps": list(schedule.eps)})
    elif isinstance(schedule, Fixed):
        write_kv(path, {"kind": "fixed", "eps": float(schedule.eps)})
    elif isinstance(schedule, RmsProp):
        write_kv(path, {"kind": "rmsprop", "eps0": float(schedule.eps0), "rho": float(schedule.rho),
                        "delta": float(schedule.delta)})
    else:
        raise TypeError(f"cannot persist {type(schedule).__name__}")


def read_schedule(path):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"schedule file not found: {p}")
    kv = read_kv(p)
    kind = kv.get("kind")
    if kind == "learned":
        return Learned([float(v) for v in kv["eps"].split(",")])
    if kind == "chebyshev":
        return Chebyshev(float(kv["alpha"]), float(kv["beta"]), int(kv["T"]),
                         kv.get("reverse", "true") == "true")
    if kind == "fixed":
        return Fixed(float(kv["eps"]))
    if kind == "rmsprop":
        return RmsProp(float(kv["eps0"]), float(kv["rho"]), float(kv["delta"]))
    raise ConfigError(f"{p}: unknown schedule kind {kind!r}")


def train_schedule(cfg: ExperimentConfig, problem: Problem | None = None, progress=None) -> TrainResult:
    if cfg.variant not in ("dusvgd", "cdusvgd"):
        raise ConfigError(f"variant {cfg.variant!r} is not trainable")
    problem = problem or build_problem(cfg)
    return train(build_task(cfg, problem), train_settings(cfg), progress)


def resolve_schedule(cfg: ExperimentConfig, problem: Problem):
    """The schedule to evaluate, plus the training result if one was produced."""
    if cfg.schedule.file:
        return read_schedule(cfg.schedule.file), None
    if cfg.variant == "fixed":
        return Fixed(cfg.schedule.eps), None
    if cfg.variant == "rmsprop":
        return RmsProp(cfg.schedule.eps0, cfg.schedule.rho, cfg.schedule.delta), None

    def progress(epoch, depth, loss, params):
        if epoch == 0 or epoch == cfg.train.epochs - 1:
            log.info("train depth=%d epoch=%d loss=%.6g", depth, epoch, loss)

    result = train_schedule(cfg, problem, progress)
    return result.schedule, result


# ---------------------------------------------------------------------------
# evaluation runs


def trial_seed(cfg: ExperimentConfig, k: int) -> int:
    return derive_seed(cfg.run.seed, "trial", k)


def run_trial(cfg: ExperimentConfig, problem: Problem, schedule, k: int):
    seed = trial_seed(cfg, k)
    particles = init_particles(problem.model, cfg.model.n_particles, seed)
    batches = BatchSampler(getattr(problem.model, "n_data", None), problem.score_batch, rng_for(seed, "batch"))
    final, trace = run(particles, problem.model, fresh(schedule), cfg.run.iters,
                       {problem.metric_name: lambda p: problem.metric(p.data)}, cfg.run.interval, batches)
    return trace, final.data


_WORKER_CACHE = {}


def _worker(cfg, schedule, k):
    key = format_config(cfg)
    if key not in _WORKER_CACHE:
        _WORKER_CACHE.clear()
        _WORKER_CACHE[key] = build_problem(cfg)
    return run_trial(cfg, _WORKER_CACHE[key], schedule, k)


@dataclass
class ExperimentResult:
    curve: MetricCurve
    schedule: object
    training: TrainResult | None
    particles: list
    metric_name: str
    errors: dict = field(default_factory=dict)

    def mean_curve(self):
        return self.curve.mean(self.metric_name)

    def summary(self):
        its, vals = self.mean_curve()
        finals = [self.curve.trial(k, self.metric_name)[1][-1] for k in sorted({r[0] for r in self.curve.rows})]
        out = {
            "metric": self.metric_name,
            "trials": len(finals),
            "final_iteration": int(its[-1]) if len(its) else 0,
            f"final.{self.metric_name}.mean": float(np.mean(finals)) if finals else float("nan"),
            f"final.{self.metric_name}.std": float(np.std(finals)) if finals else float("nan"),
        }
        s = self.schedule
        if isinstance(s, Learned):
            out["schedule.eps"] = list(s.eps)
        elif isinstance(s, Chebyshev):
            out["schedule.alpha"] = float(s.alpha)
            out["schedule.beta"] = float(s.beta)
            out["schedule.eps"] = list(s.eps)
        elif isinstance(s, Fixed):
            out["schedule.eps"] = float(s.eps)
        elif isinstance(s, RmsProp):
            out["schedule.eps0"] = float(s.eps0)
        if self.training is not None and self.training.history:
            out["train.first_loss"] = float(self.training.history[0][2])
            out["train.last_loss"] = float(self.training.history[-1][2])
        for k, msg in self.errors.items():
            out[f"error.trial{k}"] = msg
        return out


def run_experiment(cfg: ExperimentConfig, schedule=None, threads=1, problem=None) -> ExperimentResult:
    """Train if needed, then evaluate ``run.trials`` seeded runs."""
    cfg.validate()
    problem = problem or build_problem(cfg)
    training = None
    if schedule is None:
        schedule, training = resolve_schedule(cfg, problem)
    curve = MetricCurve()
    particles = []
    errors = {}
    trials = range(cfg.run.trials)
    if threads > 1:
        with ProcessPoolExecutor(threads) as pool:
            futures = [pool.submit(_worker, cfg, schedule, k) for k in trials]
            outcomes = []
            for f in futures:
                try:
                    outcomes.append(f.result())
                except Exception as exc:  # flushed as a trial-level marker
                    outcomes.append(exc)
    else:
        outcomes = []
        for k in trials:
            try:
                outcomes.append(run_trial(cfg, problem, schedule, k))
            except Exception as exc:
                outcomes.append(exc)
    for k, outcome in zip(trials, outcomes):
        if isinstance(outcome, Exception):
            errors[k] = f"{type(outcome).__name__}: {outcome}"
            log.error("trial %d failed: %s", k, errors[k])
            particles.append(None)
            continue
        trace, final = outcome
        for it, values in trace:
            for name, value in values.items():
                curve.add(k, it, name, value)
        particles.append(final)
    return ExperimentResult(curve, schedule, training, particles, problem.metric_name, errors)
