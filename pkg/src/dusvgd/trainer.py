"""Deep-unfolding training of SVGD step sizes.

Gradients of the unfolded loss are central finite differences with common
random numbers: every probe of a parameter reuses the same seeds, so particle
initializations, data minibatches and reference samples are identical across
the +/- evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import BatchSampler, Chebyshev, Learned, svgd_iterate
from .errors import ConfigError, NumericalError
from .kernels import RbfKernel
from .particles import derive_seed, init_particles, rng_for

# ---------------------------------------------------------------------------
# losses


def mmd(X, Y, kernel: RbfKernel | float = 2.0) -> float:
    """Biased (V-statistic) squared MMD; ``kernel`` may be a bandwidth ``h``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0 or len(Y) == 0:
        raise ValueError("MMD needs two non-empty sample sets")
    k = kernel if isinstance(kernel, RbfKernel) else RbfKernel(float(kernel))
    return float(k.cross(X, X).mean() - 2.0 * k.cross(X, Y).mean() + k.cross(Y, Y).mean())


def cross_entropy(labels01, probs, clip=1e-12) -> float:
    t = np.asarray(labels01, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.size} labels vs {p.size} probabilities")
    p = np.clip(p, clip, 1.0 - clip)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)))


def rmse(y, y_hat) -> float:
    y = np.asarray(y, dtype=float).ravel()
    y_hat = np.asarray(y_hat, dtype=float).ravel()
    if y.shape != y_hat.shape:
        raise ValueError(f"length mismatch: {y.size} vs {y_hat.size}")
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


# ---------------------------------------------------------------------------
# unfolded sampler


@dataclass
class UnfoldedTask:
    """Everything needed to evaluate the loss of a depth-``t`` unfolded SVGD.

    ``loss(particles, rng)`` scores an ``M x d`` particle matrix; ``rng`` is a
    per-seed stream for any randomness the loss needs (reference samples).
    """

    model: object
    n_particles: int
    loss: Callable[[np.ndarray, np.random.Generator], float]
    T: int
    variant: str = "dusvgd"
    score_batch: int | None = None
    reverse: bool = True

    def __post_init__(self):
        if self.variant not in ("dusvgd", "cdusvgd"):
            raise ConfigError(f"variant {self.variant!r} has no trainable parameters")

    def schedule(self, params):
        params = np.asarray(params, dtype=float)
        if self.variant == "dusvgd":
            if params.size != self.T:
                raise ValueError(f"expected {self.T} step sizes, got {params.size}")
            return Learned(params)
        return Chebyshev(float(params[0]), float(params[1]), self.T, self.reverse)

    def n_active(self, depth):
        """Number of leading parameters that influence a depth-``depth`` unfolding."""
        return min(depth, self.T) if self.variant == "dusvgd" else 2


def _batches(task, depth, seed):
    draw = BatchSampler(getattr(task.model, "n_data", None), task.score_batch, rng_for(seed, "batch"))
    return [draw(t) for t in range(depth)]


def _advance(particles, task, schedule, batches, start, stop):
    for t in range(start, stop):
        particles = svgd_iterate(particles, task.model, schedule, batches[t])
    return particles


def unfolded_run(params, task: UnfoldedTask, depth: int, seed: int):
    particles = init_particles(task.model, task.n_particles, seed)
    return _advance(particles, task, task.schedule(params), _batches(task, depth, seed), 0, depth)


def _score(task, particles, seed):
    value = float(task.loss(particles.data, rng_for(seed, "ref")))
    if not np.isfinite(value):
        raise NumericalError("non-finite unfolded loss")
    return value


def unfolded_loss(params, task: UnfoldedTask, depth: int, seed: int) -> float:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return _score(task, unfolded_run(params, task, depth, seed), seed)


def batch_loss(params, task, depth, seeds) -> float:
    return float(np.mean([unfolded_loss(params, task, depth, s) for s in seeds]))


def fd_steps(params, step_scale=1.0):
    p = np.asarray(params, dtype=float)
    return step_scale * np.maximum(1e-4 * np.abs(p), 1e-6)


def grad_params(params, task: UnfoldedTask, depth: int, seeds, step_scale=1.0) -> np.ndarray:
    """Central-difference gradient of the seed-averaged unfolded loss.

    Parameters that the depth-``depth`` unfolding never reads get a zero entry.
    """
    p = np.asarray(params, dtype=float)
    steps = fd_steps(p, step_scale)
    grad = np.zeros_like(p)
    for i in range(task.n_active(depth)):
        up, down = p.copy(), p.copy()
        up[i] += steps[i]
        down[i] -= steps[i]
        grad[i] = (batch_loss(up, task, depth, seeds) - batch_loss(down, task, depth, seeds)) / (2 * steps[i])
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient estimate")
    return grad


def loss_and_grad(params, task: UnfoldedTask, depth: int, seeds, step_scale=1.0):
    """``(batch_loss, grad_params)`` in one pass, with identical results.

    For a learned schedule the first ``i`` iterations do not read step ``i``, so
    both probes of that step resume from the shared trajectory instead of
    replaying it.
    """
    if task.variant != "dusvgd":
        return batch_loss(params, task, depth, seeds), grad_params(params, task, depth, seeds, step_scale)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    p = np.asarray(params, dtype=float)
    steps = fd_steps(p, step_scale)
    n = task.n_active(depth)
    base, ups, downs = [], [[] for _ in range(n)], [[] for _ in range(n)]
    schedule = task.schedule(p)
    for seed in seeds:
        batches = _batches(task, depth, seed)
        trajectory = [init_particles(task.model, task.n_particles, seed)]
        for t in range(depth):
            trajectory.append(_advance(trajectory[-1], task, schedule, batches, t, t + 1))
        base.append(_score(task, trajectory[-1], seed))
        for i in range(n):
            for sign, out in ((1.0, ups[i]), (-1.0, downs[i])):
                q = p.copy()
                q[i] += sign * steps[i]
                end = _advance(trajectory[i], task, task.schedule(q), batches, i, depth)
                out.append(_score(task, end, seed))
    grad = np.zeros_like(p)
    for i in range(n):
        grad[i] = (float(np.mean(ups[i])) - float(np.mean(downs[i]))) / (2 * steps[i])
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite gradient estimate")
    return float(np.mean(base)), grad


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class TrainState:
    params: np.ndarray
    m: np.ndarray = None
    v: np.ndarray = None
    step: int = 0
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float).copy()
        if self.m is None:
            self.m = np.zeros_like(self.params)
        if self.v is None:
            self.v = np.zeros_like(self.params)


def adam_update(state: TrainState, grad, lr, beta1=0.9, beta2=0.999, eps=1e-8,
                floor=None) -> TrainState:
    """One Adam step; ``floor`` clamps the updated parameters from below."""
    g = np.asarray(grad, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericalError("non-finite gradient passed to Adam")
    step = state.step + 1
    m = beta1 * state.m + (1 - beta1) * g
    v = beta2 * state.v + (1 - beta2) * g**2
    m_hat = m / (1 - beta1**step)
    v_hat = v / (1 - beta2**step)
    params = state.params - lr * m_hat / (np.sqrt(v_hat) + eps)
    if floor is not None:
        params = np.maximum(params, floor)
    return TrainState(params, m, v, step, state.history)


# ---------------------------------------------------------------------------
# training loops


@dataclass
class TrainSettings:
    T: int = 10
    epochs: int = 10
    batch: int = 50
    lr: float = 1e-2
    init_eps: float = 2.0
    init_alpha: float = 0.3
    init_beta: float = 1.0
    seed: int = 0


@dataclass
class TrainResult:
    schedule: object
    params: np.ndarray
    history: list  # (epoch, depth, loss) rows


LEARNED_FLOOR = 1e-12


def _minibatch_seeds(seed, depth, epoch, size):
    return [derive_seed(seed, "train", depth, epoch, b) for b in range(size)]


def train_dusvgd(task: UnfoldedTask, settings: TrainSettings, progress=None) -> TrainResult:
    """Incremental training: depth 1, 2, ..., T, each for ``epochs`` Adam steps."""
    state = TrainState(np.full(task.T, settings.init_eps))
    for depth in range(1, task.T + 1):
        for epoch in range(settings.epochs):
            seeds = _minibatch_seeds(settings.seed, depth, epoch, settings.batch)
            loss, grad = loss_and_grad(state.params, task, depth, seeds)
            state = adam_update(state, grad, settings.lr, floor=LEARNED_FLOOR)
            state.history.append((epoch, depth, loss))
            if progress:
                progress(epoch, depth, loss, state.params)
    return TrainResult(task.schedule(state.params), state.params, state.history)


def train_cdusvgd(task: UnfoldedTask, settings: TrainSettings, progress=None) -> TrainResult:
    """Train (alpha, beta) on the depth-T output only."""
    state = TrainState(np.array([settings.init_alpha, settings.init_beta]))
    depth = task.T
    for epoch in range(settings.epochs):
        seeds = _minibatch_seeds(settings.seed, depth, epoch, settings.batch)
        loss = batch_loss(state.params, task, depth, seeds)
        grad = grad_params(state.params, task, depth, seeds)
        state = adam_update(state, grad, settings.lr)
        state.history.append((epoch, depth, loss))
        if progress:
            progress(epoch, depth, loss, state.params)
    return TrainResult(task.schedule(state.params), state.params, state.history)


def train(task: UnfoldedTask, settings: TrainSettings, progress=None) -> TrainResult:
    if task.variant == "dusvgd":
        return train_dusvgd(task, settings, progress)
    return train_cdusvgd(task, settings, progress)
