"""SVGD iteration, the kernelized Stein direction, and step-size schedules."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .kernels import gram_and_bandwidth
from .particles import ParticleSet, check_finite


def stein_direction(particles, model, batch=None) -> np.ndarray:
    """phi(x_i) = (1/M) sum_j [k(x_j, x_i) score(x_j) + grad_{x_j} k(x_j, x_i)].

    The bandwidth is the median heuristic on the current particles.
    """
    X = getattr(particles, "data", particles)
    X = np.asarray(X, dtype=float)
    m = X.shape[0]
    S = np.asarray(model.score(X, batch), dtype=float).reshape(X.shape)
    bad = ~np.isfinite(S)
    if bad.any():
        raise NumericalError("non-finite score", index=int(np.argwhere(bad)[0][0]))
    K, h = gram_and_bandwidth(X)
    # sum_j grad_{x_j} k(x_j, x_i) = (2/h) (x_i sum_j K_ij - sum_j K_ij x_j)
    repulsion = (2.0 / h) * (X * K.sum(axis=1)[:, None] - K @ X)
    phi = (K @ S + repulsion) / m
    check_finite(phi, "Stein direction")
    return phi


# ---------------------------------------------------------------------------
# step-size schedules


@dataclass
class Fixed:
    eps: float

    def step(self, t, direction=None):
        return self.eps


@dataclass
class RmsProp:
    """Elementwise RMSProp on the Stein direction, one accumulator per particle coordinate."""

    eps0: float = 0.1
    rho: float = 0.9
    delta: float = 1e-8
    state: np.ndarray | None = field(default=None, repr=False)

    def step(self, t, direction):
        g2 = np.asarray(direction) ** 2
        if self.state is None:
            self.state = np.zeros_like(g2)
        self.state = self.rho * self.state + (1 - self.rho) * g2
        return self.eps0 / (np.sqrt(self.state) + self.delta)

    def reset(self):
        self.state = None


@dataclass
class Learned:
    """T trained step sizes, reused periodically (t mod T)."""

    eps: np.ndarray

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float).ravel()
        if self.eps.size < 1:
            raise ValueError("learned schedule needs at least one step")

    @property
    def T(self):
        return self.eps.size

    def step(self, t, direction=None):
        return float(self.eps[t % self.T])


def chebyshev_steps(alpha: float, beta: float, T: int, reverse: bool = True) -> np.ndarray:
    """Chebyshev step sizes with lambda_1 = alpha^2, lambda_n = alpha^2 + beta^2.

    ``reverse=True`` orders the steps with angle (2(T-t)-1)pi/(2T), otherwise
    (2t+1)pi/(2T).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if alpha == 0 and beta == 0:
        raise ValueError("alpha = beta = 0 gives a degenerate spectrum")
    lam1 = alpha**2
    lamn = alpha**2 + beta**2
    t = np.arange(T)
    num = 2 * (T - t) - 1 if reverse else 2 * t + 1
    cos = np.cos(num * np.pi / (2 * T))
    return 1.0 / ((lamn + lam1) / 2 + (lamn - lam1) / 2 * cos)


def chebyshev_jacobian(alpha: float, beta: float, T: int, reverse: bool = True) -> np.ndarray:
    """d eps_t / d(alpha, beta), shape (T, 2)."""
    t = np.arange(T)
    num = 2 * (T - t) - 1 if reverse else 2 * t + 1
    cos = np.cos(num * np.pi / (2 * T))
    eps = chebyshev_steps(alpha, beta, T, reverse)
    d_alpha = 2 * alpha * np.ones(T)
    d_beta = beta * (1 + cos)
    return -(eps**2)[:, None] * np.column_stack([d_alpha, d_beta])


@dataclass
class Chebyshev:
    alpha: float
    beta: float
    T: int
    reverse: bool = True

    def __post_init__(self):
        self.eps = chebyshev_steps(self.alpha, self.beta, self.T, self.reverse)

    def step(self, t, direction=None):
        return float(self.eps[t % self.T])


def step_size(schedule, t, direction=None):
    if t < 0:
        raise ValueError("iteration index must be non-negative")
    return schedule.step(t, direction)


def fresh(schedule):
    """Copy of ``schedule`` with any adaptive state cleared."""
    s = copy.deepcopy(schedule)
    if isinstance(s, RmsProp):
        s.reset()
    return s


# ---------------------------------------------------------------------------
# iteration


class BatchSampler:
    """Per-iteration data minibatches drawn from a dedicated generator."""

    def __init__(self, n_data, size, rng):
        self.n_data = n_data
        self.size = size
        self.rng = rng

    def __call__(self, t):
        if self.n_data is None or self.size is None or self.size >= self.n_data:
            return None
        return self.rng.choice(self.n_data, size=self.size, replace=False)


def svgd_iterate(particles: ParticleSet, model, schedule, batch=None) -> ParticleSet:
    phi = stein_direction(particles, model, batch)
    eps = step_size(schedule, particles.iter, phi)
    return ParticleSet(particles.data + eps * phi, particles.iter + 1)


def run(particles: ParticleSet, model, schedule, total_iters, callbacks=None, interval=1,
        batches=None):
    """Iterate ``total_iters`` times, recording metrics every ``interval`` iterations.

    ``callbacks`` maps metric names to ``f(ParticleSet) -> float``. Returns the
    final particles and a list of ``(iteration, {name: value})`` snapshots,
    starting with the initial state.
    """
    if total_iters < 0:
        raise ValueError("total_iters must be non-negative")
    if interval < 1:
        raise ValueError("interval must be >= 1")
    callbacks = callbacks or {}

    def snapshot(p):
        return (p.iter, {name: float(fn(p)) for name, fn in callbacks.items()})

    trace = [snapshot(particles)]
    for i in range(total_iters):
        batch = batches(particles.iter) if batches is not None else None
        particles = svgd_iterate(particles, model, schedule, batch)
        if (i + 1) % interval == 0:
            trace.append(snapshot(particles))
    return particles, trace
