"""Particle-set state and deterministic random streams."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

# Fixed purpose tags; adding a new consumer never shifts existing streams.
_PURPOSES = ("init", "batch", "split", "data", "train", "eval", "ref", "trial")


def _purpose_key(purpose: str) -> int:
    if purpose in _PURPOSES:
        return _PURPOSES.index(purpose)
    return zlib.crc32(purpose.encode()) + len(_PURPOSES)


def rng_for(seed: int, purpose: str, *extra: int) -> np.random.Generator:
    """Independent generator for ``(seed, purpose, *extra)``.

    Streams for different purposes never overlap, so drawing more numbers for
    one purpose leaves every other stream untouched.
    """
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_purpose_key(purpose), *map(int, extra)))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, purpose: str, *extra: int) -> int:
    """A child 64-bit seed, for handing to code that wants a plain integer."""
    return int(rng_for(seed, purpose, *extra).integers(0, 2**63, dtype=np.int64))


@dataclass
class ParticleSet:
    data: np.ndarray
    iter: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 1:
            self.data = self.data[:, None]
        if self.data.ndim != 2 or self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"particle data must be a non-empty M x d matrix, got shape {self.data.shape}")
        if self.iter < 0:
            raise ValueError("iteration counter must be non-negative")
        check_finite(self.data)

    @property
    def m(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def copy(self) -> ParticleSet:
        return ParticleSet(self.data.copy(), self.iter)


def check_finite(data: np.ndarray, what: str = "particle") -> None:
    bad = ~np.isfinite(data)
    if bad.any():
        row = int(np.argwhere(bad)[0][0]) if data.ndim > 1 else int(np.argmax(bad))
        raise NumericalError(f"non-finite {what} value", index=row)


def init_particles(model, m: int, seed: int) -> ParticleSet:
    """Draw ``m`` particles i.i.d. from the model's initial distribution."""
    if m < 1:
        raise ValueError(f"particle count must be >= 1, got {m}")
    sampler = getattr(model, "sample_init", None)
    if sampler is None:
        raise ConfigError(f"{type(model).__name__} defines no initial distribution")
    x = np.asarray(sampler(rng_for(seed, "init"), m), dtype=float)
    return ParticleSet(x.reshape(m, model.dim), 0)
