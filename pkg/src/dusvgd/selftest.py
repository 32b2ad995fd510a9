"""Quick invariant checks runnable from the command line (``dusvgd selftest``)."""

from __future__ import annotations

import math

import numpy as np

from .engine import Fixed, chebyshev_steps, svgd_iterate
from .kernels import RbfKernel, median_bandwidth
from .particles import ParticleSet
from .targets import BayesLogRegModel, BayesNNModel, GaussianMixture1D, GaussianTarget
from .trainer import UnfoldedTask, grad_params, mmd


def _fd(f, x, step=1e-5):
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        out[i] = (f(x + e) - f(x - e)) / (2 * step)
    return out


def _rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-8)))


def check_kernel(rng):
    X = rng.normal(size=(30, 3))
    k = RbfKernel(median_bandwidth(X))
    G = k.gram(X)
    x, y = rng.normal(size=3), rng.normal(size=3)
    g = k.grad_first_arg(x, y)
    fd = _fd(lambda v: k.eval(v, y), x)
    ok = (np.array_equal(G, G.T) and np.all(np.diag(G) == 1)
          and np.linalg.eigvalsh(G).min() >= -1e-8 and _rel_err(g, fd) < 1e-6)
    return ok, f"grad rel err {_rel_err(g, fd):.1e}"


def check_scores(rng):
    gm = GaussianMixture1D()
    errs = [abs(gm.score(x) - _fd(lambda v: gm.log_density(v)[0], np.array([x]))[0]) / abs(gm.score(x))
            for x in (-3.0, 0.0, 1.0, 3.0)]
    X = rng.normal(size=(20, 3))
    blr = BayesLogRegModel(X, np.where(rng.random(20) < 0.5, -1, 1))
    p = rng.normal(size=4)
    e_blr = _rel_err(blr.score(p), _fd(blr.log_posterior, p))
    bnn = BayesNNModel(X[:10], rng.normal(size=10), hidden=4)
    q = rng.normal(scale=0.5, size=bnn.dim)
    e_bnn = _rel_err(bnn.score(q), _fd(bnn.log_posterior, q))
    anti = abs(gm.score(1.0) + gm.score(-0.5))
    ok = max(errs) < 1e-6 and e_blr < 1e-5 and e_bnn < 1e-4 and anti < 1e-10
    return ok, f"mixture {max(errs):.1e}, logreg {e_blr:.1e}, bnn {e_bnn:.1e}"


def check_single_particle(rng):
    sig = np.array([0.5, 2.0, 3.0])
    x = rng.normal(size=3)
    out = svgd_iterate(ParticleSet(x[None]), GaussianTarget(sig), Fixed(0.3)).data[0]
    err = float(np.max(np.abs(out - (x - 0.3 * x / sig))))
    return err < 1e-12, f"max abs err {err:.1e}"


def check_chebyshev(rng):
    lam = np.linspace(1.0, 4.0, 10_000)

    def factor(steps):
        return np.max(np.abs(np.prod(1 - np.outer(steps, lam), axis=0)))

    cheb = factor(chebyshev_steps(1.0, math.sqrt(3.0), 4))
    const = min(factor(np.full(4, e)) for e in np.linspace(1e-3, 0.5, 500, endpoint=False))
    return cheb < const - 1e-3, f"chebyshev {cheb:.4f} vs constant {const:.4f}"


def check_mmd(rng):
    X, Y = rng.normal(size=(15, 2)), rng.normal(size=(9, 2))
    a = 2.0
    single = mmd(np.array([[0.0]]), np.array([[a]]), 2.0)
    ok = (abs(mmd(X, X)) < 1e-12 and abs(single - 2 * (1 - math.exp(-a * a / 2))) < 1e-10
          and abs(mmd(X, Y) - mmd(Y, X)) < 1e-12)
    return ok, f"singleton {single:.6f}"


def check_unfolded_gradient(rng):
    sigma2 = 2.0
    model = GaussianTarget([sigma2])
    task = UnfoldedTask(model, 1, lambda P, r: float(np.sum(P**2)), 1)
    eps = 0.4
    g = grad_params(np.array([eps]), task, 1, [5])[0]
    from .particles import init_particles
    x0 = init_particles(model, 1, 5).data[0, 0]
    exact = -2 * x0**2 * (1 - eps / sigma2) / sigma2
    return abs(g - exact) / abs(exact) < 1e-4, f"rel err {abs(g - exact) / abs(exact):.1e}"


CHECKS = {
    "kernel": check_kernel,
    "scores": check_scores,
    "single-particle reduction": check_single_particle,
    "chebyshev oracle": check_chebyshev,
    "mmd identities": check_mmd,
    "unfolded gradient": check_unfolded_gradient,
}


def run_selftest(seed=0, out=print):
    rng = np.random.default_rng(seed)
    all_ok = True
    for name, check in CHECKS.items():
        try:
            ok, detail = check(rng)
        except Exception as exc:  # report, keep going
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
