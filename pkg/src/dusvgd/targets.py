"""Target distributions exposed through their score ``grad log p``.

Every model scores a whole particle matrix at once: ``score(X, batch)`` takes
an ``M x d`` array (a single ``d``-vector is also accepted) and an optional
index array selecting a data minibatch. Data likelihoods over a minibatch are
rescaled by ``N / |batch|``.

Precision parameters (alpha, lambda, gamma) are carried as logs. Their prior is
the Gamma density ``alpha^(a-1) exp(-alpha / b)``; together with the Jacobian of
``alpha = exp(s)`` the log-prior in ``s`` is ``a*s - exp(s)/b``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit, log_expit, logsumexp

from .errors import ConfigError, DataError


class ScoreModel:
    dim: int
    n_data: int | None = None

    def score(self, X, batch=None) -> np.ndarray:
        raise NotImplementedError

    def sample_init(self, rng: np.random.Generator, m: int) -> np.ndarray:
        raise ConfigError(f"{type(self).__name__} defines no initial distribution")


def _rows(X, dim):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X = X.reshape(1, -1) if single else X
    if X.shape[1] != dim:
        raise ValueError(f"expected particles of dimension {dim}, got {X.shape[1]}")
    return X, single


def _batch_indices(batch, n):
    if batch is None:
        return np.arange(n), 1.0
    idx = np.asarray(batch, dtype=np.intp).ravel()
    if idx.size == 0:
        raise ValueError("empty data batch")
    return idx, n / idx.size


def _gamma_sample(rng, a, b, size):
    # printed density alpha^(a-1) exp(-alpha/b): b is the scale
    return rng.gamma(a, b, size=size)


class GaussianTarget(ScoreModel):
    """Zero-mean Gaussian ``N(0, cov)``; mostly for single-particle identities."""

    def __init__(self, cov, init_scale=1.0):
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if cov.shape[0] != cov.shape[1]:
            cov = np.diag(cov.ravel())
        self.cov = cov
        self.precision = np.linalg.inv(cov)
        self.dim = cov.shape[0]
        self.init_scale = init_scale

    def score(self, X, batch=None):
        X, single = _rows(X, self.dim)
        s = -X @ self.precision.T
        return s[0] if single else s

    def log_density(self, x):
        x = np.asarray(x, dtype=float).ravel()
        return -0.5 * x @ self.precision @ x

    def sample_init(self, rng, m):
        return self.init_scale * rng.standard_normal((m, self.dim))


class GaussianMixture1D(ScoreModel):
    """One-dimensional Gaussian mixture; weights need not sum to one."""

    dim = 1

    def __init__(self, means=(-2.0, 2.5), variances=(1.0, 1.0), weights=(0.75, 0.75),
                 init_mean=-2.0, init_var=1.0):
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights <= 0) or np.any(self.variances <= 0):
            raise ConfigError("mixture weights and variances must be positive")
        self.init_mean = init_mean
        self.init_var = init_var

    def _log_components(self, x):
        x = np.asarray(x, dtype=float).reshape(-1, 1)
        return (np.log(self.weights) - 0.5 * np.log(2 * np.pi * self.variances)
                - 0.5 * (x - self.means) ** 2 / self.variances), x

    def log_density(self, x):
        lc, _ = self._log_components(x)
        return logsumexp(lc, axis=1)

    def score(self, X, batch=None):
        X = np.asarray(X, dtype=float)
        lc, x = self._log_components(X)
        resp = np.exp(lc - logsumexp(lc, axis=1, keepdims=True))
        s = np.sum(resp * (self.means - x) / self.variances, axis=1)
        return s.reshape(X.shape) if X.ndim else float(s[0])

    def density(self, grid):
        """Normalized mixture density (weights rescaled to sum to one)."""
        w = self.weights / self.weights.sum()
        g = np.asarray(grid, dtype=float)[:, None]
        comp = np.exp(-0.5 * (g - self.means) ** 2 / self.variances) / np.sqrt(2 * np.pi * self.variances)
        return comp @ w

    def sample(self, rng, n):
        w = self.weights / self.weights.sum()
        c = rng.choice(len(w), size=n, p=w)
        return self.means[c] + np.sqrt(self.variances[c]) * rng.standard_normal(n)

    def sample_init(self, rng, m):
        return self.init_mean + np.sqrt(self.init_var) * rng.standard_normal((m, 1))


class BayesLogRegModel(ScoreModel):
    """Logistic regression with a Gamma-distributed prior precision.

    Particle layout: ``(w_1..w_K, log alpha)``. Labels are ``-1/+1``.
    """

    def __init__(self, X, t, a=1.0, b=0.01):
        self.X = np.asarray(X, dtype=float)
        t = np.asarray(t).ravel()
        if not np.all(np.isin(t, (-1, 1))):
            raise DataError("logistic-regression labels must be -1 or +1")
        if a <= 0 or b <= 0:
            raise ConfigError("Gamma hyperparameters must be positive")
        self.t = t.astype(float)
        self.t01 = (self.t + 1.0) / 2.0
        self.a, self.b = float(a), float(b)
        self.n_data, self.k = self.X.shape
        self.dim = self.k + 1

    def score(self, X, batch=None):
        P, single = _rows(X, self.dim)
        idx, scale = _batch_indices(batch, self.n_data)
        Xb, tb = self.X[idx], self.t01[idx]
        w, s = P[:, :self.k], P[:, self.k]
        alpha = np.exp(s)
        resid = tb[:, None] - expit(Xb @ w.T)                     # (n, M)
        grad_w = scale * (resid.T @ Xb) - alpha[:, None] * w
        grad_s = 0.5 * self.k - 0.5 * alpha * np.sum(w**2, 1) + self.a - alpha / self.b
        out = np.column_stack([grad_w, grad_s])
        return out[0] if single else out

    def log_posterior(self, particle, batch=None):
        p = np.asarray(particle, dtype=float)
        idx, scale = _batch_indices(batch, self.n_data)
        w, s = p[:self.k], p[self.k]
        alpha = np.exp(s)
        z = self.X[idx] @ w
        loglik = np.sum(log_expit(self.t[idx] * z))
        return (scale * loglik + 0.5 * self.k * s - 0.5 * alpha * (w @ w)
                + self.a * s - alpha / self.b)

    def predict_proba(self, P, X_test):
        """Posterior-predictive ``p(t=+1 | x)`` averaged over particles."""
        W = np.asarray(getattr(P, "data", P), dtype=float)[:, :self.k]
        return expit(np.asarray(X_test, dtype=float) @ W.T).mean(axis=1)

    def sample_init(self, rng, m):
        alpha = _gamma_sample(rng, self.a, self.b, m)
        w = rng.standard_normal((m, self.k)) / np.sqrt(alpha)[:, None]
        return np.column_stack([w, np.log(alpha)])


def blr_predict(model: BayesLogRegModel, particles, X_test):
    return model.predict_proba(particles, X_test)


class BayesNNModel(ScoreModel):
    """One-hidden-layer ReLU regression network with Gamma priors on precisions.

    Particle layout (flattened): ``W_hid (K x H, row-major), b_hid (H),
    w_out (H), b_out, log lambda, log gamma``. Every network weight, biases
    included, shares the ``N(0, 1/lambda)`` prior.
    """

    def __init__(self, X, y, hidden=50, a_lambda=1.0, b_lambda=0.01, a_gamma=1.0, b_gamma=0.01,
                 init="prior"):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("inputs and targets differ in length")
        self.n_data, self.k = self.X.shape
        self.hidden = int(hidden)
        self.a_lambda, self.b_lambda = float(a_lambda), float(b_lambda)
        self.a_gamma, self.b_gamma = float(a_gamma), float(b_gamma)
        if init not in ("prior", "fan_in"):
            raise ConfigError(f"unknown BNN weight initialization {init!r}")
        self.init = init
        H, K = self.hidden, self.k
        self.n_weights = K * H + 2 * H + 1
        self.dim = self.n_weights + 2

    def unpack(self, P):
        P = np.asarray(P, dtype=float)
        if P.ndim == 1:
            P = P[None]
        if P.shape[1] not in (self.dim, self.n_weights):
            raise ValueError(f"expected parameter vectors of length {self.dim}, got {P.shape[1]}")
        H, K = self.hidden, self.k
        o = K * H
        W1 = P[:, :o].reshape(-1, K, H)
        b1 = P[:, o:o + H]
        w2 = P[:, o + H:o + 2 * H]
        b2 = P[:, o + 2 * H]
        return W1, b1, w2, b2

    def _forward(self, P, X):
        W1, b1, w2, b2 = self.unpack(P)
        pre = np.matmul(X, W1) + b1[:, None, :]                  # (M, n, H)
        hid = np.maximum(pre, 0.0)
        out = np.matmul(hid, w2[:, :, None])[:, :, 0] + b2[:, None]
        return out, pre, hid

    def forward(self, weights, X):
        """Network outputs, shape ``(M, n)`` (or ``(n,)`` / scalar for single inputs)."""
        w = np.asarray(weights, dtype=float)
        Xa = np.asarray(X, dtype=float)
        single_x = Xa.ndim == 1
        Xa = np.atleast_2d(Xa)
        if Xa.shape[1] != self.k:
            raise ValueError(f"expected inputs of dimension {self.k}, got {Xa.shape[1]}")
        out, _, _ = self._forward(w, Xa)
        if w.ndim == 1:
            out = out[0]
            return float(out[0]) if single_x else out
        return out[:, 0] if single_x else out

    def score(self, X, batch=None):
        P, single = _rows(X, self.dim)
        idx, scale = _batch_indices(batch, self.n_data)
        Xb, yb = self.X[idx], self.y[idx]
        lam = np.exp(P[:, -2])
        gam = np.exp(P[:, -1])
        out, pre, hid = self._forward(P, Xb)
        _, _, w2, _ = self.unpack(P)
        resid = yb[None, :] - out                                  # (M, n)
        g = scale * gam[:, None] * resid                           # d loglik / d out
        grad_w2 = np.matmul(g[:, None, :], hid)[:, 0]
        grad_b2 = g.sum(1)
        dpre = g[:, :, None] * w2[:, None, :] * (pre > 0)
        grad_W1 = np.matmul(Xb.T, dpre).reshape(len(P), -1)
        grad_b1 = dpre.sum(1)
        weights = P[:, :self.n_weights]
        grad_net = np.column_stack([grad_W1, grad_b1, grad_w2, grad_b2]) - lam[:, None] * weights
        grad_sl = (0.5 * self.n_weights - 0.5 * lam * np.sum(weights**2, 1)
                   + self.a_lambda - lam / self.b_lambda)
        grad_sg = (scale * np.sum(0.5 - 0.5 * gam[:, None] * resid**2, 1)
                   + self.a_gamma - gam / self.b_gamma)
        res = np.column_stack([grad_net, grad_sl, grad_sg])
        return res[0] if single else res

    def log_posterior(self, particle, batch=None):
        p = np.asarray(particle, dtype=float)
        idx, scale = _batch_indices(batch, self.n_data)
        sl, sg = p[-2], p[-1]
        lam, gam = np.exp(sl), np.exp(sg)
        out, _, _ = self._forward(p, self.X[idx])
        resid = self.y[idx] - out[0]
        w = p[:self.n_weights]
        loglik = np.sum(0.5 * sg - 0.5 * gam * resid**2)
        return (scale * loglik + 0.5 * self.n_weights * sl - 0.5 * lam * (w @ w)
                + self.a_lambda * sl - lam / self.b_lambda
                + self.a_gamma * sg - gam / self.b_gamma)

    def predict(self, P, X_test):
        """Posterior-predictive mean over particles."""
        P = np.asarray(getattr(P, "data", P), dtype=float)
        out, _, _ = self._forward(P, np.atleast_2d(np.asarray(X_test, dtype=float)))
        return out.mean(axis=0)

    def sample_init(self, rng, m):
        lam = _gamma_sample(rng, self.a_lambda, self.b_lambda, m)
        gam = _gamma_sample(rng, self.a_gamma, self.b_gamma, m)
        z = rng.standard_normal((m, self.n_weights))
        if self.init == "prior":
            w = z / np.sqrt(lam)[:, None]
        else:
            # per-layer 1/sqrt(fan_in + 1) scaling; precisions still from the prior
            H, K = self.hidden, self.k
            scale = np.concatenate([np.full(K * H + H, 1 / np.sqrt(K + 1)),
                                    np.full(H + 1, 1 / np.sqrt(H + 1))])
            w = z * scale
        return np.column_stack([w, np.log(lam), np.log(gam)])


def bnn_forward(model: BayesNNModel, weights, x):
    return model.forward(weights, x)


def bnn_predict(model: BayesNNModel, particles, X_test):
    return model.predict(particles, X_test)
