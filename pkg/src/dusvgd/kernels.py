"""RBF kernel, median-heuristic bandwidth, Gram matrices and kernel gradients.

The kernel is parametrized by a squared-distance scale ``h``:
``k(x, y) = exp(-||x - y||^2 / h)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

H_MIN = 1e-6


@dataclass(frozen=True)
class RbfKernel:
    h: float

    def __post_init__(self):
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"bandwidth must be positive and finite, got {self.h}")

    def eval(self, x, y) -> float:
        x, y = _pair(x, y)
        return float(np.exp(-np.sum((x - y) ** 2) / self.h))

    def grad_first_arg(self, x, y) -> np.ndarray:
        """Gradient of ``k(x, y)`` with respect to ``x``."""
        x, y = _pair(x, y)
        diff = x - y
        return -(2.0 / self.h) * diff * np.exp(-np.sum(diff**2) / self.h)

    def gram(self, X) -> np.ndarray:
        return np.exp(-pairwise_sq_dists(X) / self.h)

    def cross(self, X, Y) -> np.ndarray:
        """Rectangular kernel matrix ``K[i, j] = k(X[i], Y[j])``."""
        X = _as_matrix(X)
        Y = _as_matrix(Y)
        if X.shape[1] != Y.shape[1]:
            raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
        sq = np.sum(X**2, 1)[:, None] + np.sum(Y**2, 1)[None, :] - 2.0 * X @ Y.T
        return np.exp(-np.maximum(sq, 0.0) / self.h)


def _pair(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return x, y


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


def pairwise_sq_dists(X) -> np.ndarray:
    """Symmetric M x M squared distances; each unordered pair computed once."""
    X = _as_matrix(X)
    if X.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(X, "sqeuclidean"))


def median_bandwidth(X, h_min: float = H_MIN) -> float:
    """``med^2 / log M`` over the pairwise Euclidean distances, clamped below at ``h_min``."""
    data = getattr(X, "data", X)
    data = _as_matrix(data)
    m = data.shape[0]
    if m < 2:
        raise ValueError("median heuristic needs at least two particles")
    return _bandwidth_from_sq(pdist(data, "sqeuclidean"), m, h_min)


def _bandwidth_from_sq(condensed_sq: np.ndarray, m: int, h_min: float = H_MIN) -> float:
    med = np.median(np.sqrt(condensed_sq))
    return max(float(med**2 / np.log(m)), h_min)


def gram_and_bandwidth(X, h_min: float = H_MIN):
    """Gram matrix under the median-heuristic bandwidth, plus that bandwidth.

    A single particle falls back to ``h_min`` (its Gram matrix is ``[[1]]``).
    """
    X = _as_matrix(X)
    m = X.shape[0]
    if m == 1:
        return np.ones((1, 1)), h_min
    condensed = pdist(X, "sqeuclidean")
    h = _bandwidth_from_sq(condensed, m, h_min)
    return np.exp(-squareform(condensed) / h), h
