"""Acceptance suite: one test per criterion, each verdict printed in the summary block.

Criteria 1-6 are quick. Criteria 7-10 rerun the desk-scale experiments from
``configs/`` (training included) and take roughly an hour together; 11 repeats
two CLI runs. These carry the ``slow`` marker so ``-m "not slow"`` skips them.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import record
from dusvgd.bench.cli import main
from dusvgd.bench.config import load_config
from dusvgd.bench.experiment import run_experiment
from dusvgd.bench.metrics import first_crossing, kde, local_maxima
from dusvgd.engine import Fixed, chebyshev_steps, svgd_iterate
from dusvgd.kernels import RbfKernel, median_bandwidth
from dusvgd.particles import ParticleSet, init_particles
from dusvgd.targets import BayesLogRegModel, BayesNNModel, GaussianMixture1D, GaussianTarget
from dusvgd.trainer import UnfoldedTask, grad_params, mmd

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def central_diff(f, x, step=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        out[i] = (f(x + e) - f(x - e)) / (2 * step)
    return out


def vec_rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ---------------------------------------------------------------- 1-6: oracles


def test_01_kernel_suite():
    rng = np.random.default_rng(1)
    worst_eig, worst_grad, sym, diag = np.inf, 0.0, True, True
    for m in (2, 5, 13, 31, 50):
        X = rng.normal(size=(m, 3)) * rng.uniform(0.1, 3.0)
        k = RbfKernel(median_bandwidth(X))
        G = k.gram(X)
        sym &= bool(np.array_equal(G, G.T))
        diag &= bool(np.all(np.diag(G) == 1.0))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(G).min()))
        for _ in range(5):
            x, y = rng.normal(size=3), rng.normal(size=3)
            g = k.grad_first_arg(x, y)
            if np.linalg.norm(g) < 1e-8:
                continue
            fd = central_diff(lambda v: k.eval(v, y), x)
            worst_grad = max(worst_grad, float(np.max(np.abs(g - fd) / np.abs(fd))))
    ok = sym and diag and worst_eig >= -1e-8 and worst_grad < 1e-6
    record(1, "kernel suite", ok, f"symmetric={sym} unit-diag={diag} min-eig={worst_eig:.2e} "
                                  f"grad rel err={worst_grad:.1e}")
    assert ok


def test_02_score_suite():
    rng = np.random.default_rng(2)
    gm = GaussianMixture1D()
    gm_err = max(abs(gm.score(x) - central_diff(lambda v: gm.log_density(v)[0], [x])[0]) / abs(gm.score(x))
                 for x in (-3.0, 0.0, 1.0, 3.0))
    anti = max(abs(gm.score(0.25 + d) + gm.score(0.25 - d)) for d in (0.1, 0.7, 1.9, 4.0))
    scaled = GaussianMixture1D(weights=(7.5, 7.5))
    rescale = max(abs(gm.score(x) - scaled.score(x)) for x in np.linspace(-6, 6, 25))

    X = rng.normal(size=(20, 4))
    t = np.where(rng.random(20) < 0.5, -1, 1)
    blr = BayesLogRegModel(X, t)
    blr_err = max(vec_rel(blr.score(p), central_diff(blr.log_posterior, p))
                  for p in rng.normal(scale=0.5, size=(5, 5)))

    bnn = BayesNNModel(rng.normal(size=(10, 3)), rng.normal(size=10), hidden=50)
    bnn_err, checked = 0.0, 0
    while checked < 5:
        p = rng.normal(scale=0.3, size=bnn.dim)
        _, pre, _ = bnn._forward(p, bnn.X)
        if np.min(np.abs(pre)) <= 1e-3:
            continue
        bnn_err = max(bnn_err, vec_rel(bnn.score(p), central_diff(bnn.log_posterior, p)))
        checked += 1
    ok = gm_err < 1e-6 and blr_err < 1e-5 and bnn_err < 1e-4 and anti < 1e-10 and rescale < 1e-12
    record(2, "score suite", ok, f"mixture {gm_err:.1e}, logreg {blr_err:.1e}, bnn {bnn_err:.1e}, "
                                 f"antisymmetry {anti:.1e}, weight rescaling {rescale:.1e}")
    assert ok


def test_03_single_particle_reduction():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        sig = rng.uniform(0.2, 5.0, size=4)
        eps = rng.uniform(0.01, 1.0)
        x = rng.normal(size=4) * 3
        out = svgd_iterate(ParticleSet(x[None]), GaussianTarget(sig), Fixed(eps)).data[0]
        worst = max(worst, float(np.max(np.abs(out - (x - eps * x / sig)))))
    record(3, "M=1 reduction to gradient descent", worst < 1e-12, f"max abs err {worst:.1e}")
    assert worst < 1e-12


def test_04_chebyshev_beats_constant_step():
    start = time.perf_counter()
    lam = np.linspace(1.0, 4.0, 4001)
    cheb = float(np.max(np.abs(np.prod(1.0 - np.outer(chebyshev_steps(1.0, math.sqrt(3.0), 4), lam), axis=0))))
    consts = np.linspace(1e-3, 1.0, 1000)[:, None]
    best_const = float(np.min(np.max(np.abs(1.0 - consts * lam) ** 4, axis=1)))
    elapsed = time.perf_counter() - start
    ok = best_const - cheb > 1e-3 and elapsed < 1.0
    record(4, "Chebyshev oracle", ok, f"chebyshev {cheb:.5f} < best constant {best_const:.5f} "
                                      f"(margin {best_const - cheb:.4f}), {elapsed:.2f} s")
    assert ok


def test_05_mmd_identities():
    rng = np.random.default_rng(5)
    same = max(abs(mmd(X, X)) for X in (rng.normal(size=(n, 2)) for n in (1, 7, 40)))
    single = max(abs(mmd(np.array([[0.0]]), np.array([[a]])) - 2 * (1 - math.exp(-a * a / 2)))
                 for a in (0.3, 1.0, 2.0, 5.0))
    X, Y = rng.normal(size=(12, 3)), rng.normal(0.5, size=(20, 3))
    sym = abs(mmd(X, Y) - mmd(Y, X))
    ok = same < 1e-12 and single < 1e-10 and sym < 1e-12
    record(5, "MMD identities", ok, f"mmd(X,X) {same:.1e}, singleton {single:.1e}, symmetry {sym:.1e}")
    assert ok


def test_06_unfolded_gradient_oracle():
    sigma2 = 2.0
    model = GaussianTarget([sigma2])
    task = UnfoldedTask(model, 1, lambda P, rng: float(np.sum(P**2)), T=1)
    worst = 0.0
    for seed in (1, 2, 3):
        x0 = init_particles(model, 1, seed).data[0, 0]
        for eps in (0.1, 0.5, 1.3):
            g = grad_params(np.array([eps]), task, 1, [seed])[0]
            exact = -2 * x0**2 * (1 - eps / sigma2) / sigma2
            worst = max(worst, abs(g - exact) / abs(exact))
    smooth = UnfoldedTask(GaussianTarget([1.0, 3.0]), 5, lambda P, rng: float(np.sum(P**4)), T=2)
    p = np.array([0.36, 0.63])
    g1, g2, g4 = (grad_params(p, smooth, 2, [3], step_scale=s) for s in (50.0, 100.0, 200.0))
    ratio = (g2 - g1) / (g4 - g2)
    ok = worst < 1e-4 and bool(np.all(np.abs(ratio - 0.25) < 0.01))
    record(6, "unfolded-gradient oracle", ok, f"closed-form rel err {worst:.1e}, "
                                              f"Richardson ratios {np.round(ratio, 4).tolist()} (order 2 -> 0.25)")
    assert ok


# ---------------------------------------------------------------- 7-10: desk-scale experiments


_CACHE = {}


def experiment(name):
    if name not in _CACHE:
        _CACHE[name] = run_experiment(load_config(CONFIGS / f"{name}.cfg"))
    return _CACHE[name]


def value_at(result, iteration):
    its, vals = result.mean_curve()
    return float(vals[list(its).index(iteration)])


@pytest.mark.slow
def test_07_mixture_convergence_speed():
    fixed = experiment("mixture_fixed")
    level = value_at(fixed, 200)
    hits = {}
    for name in ("mixture_dusvgd", "mixture_cdusvgd", "mixture_rmsprop"):
        its, vals = experiment(name).mean_curve()
        hits[name.split("_")[1]] = first_crossing(its, vals, level)
    ok = all(hits[v] is not None and hits[v] <= 60 for v in ("dusvgd", "cdusvgd"))
    record(7, "mixture: trained samplers reach fixed@200 MMD within 60 iterations", ok,
           f"fixed@200 MMD {level:.4f}; first iteration at that level: {hits}")
    assert ok


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="a bandwidth-0.2 KDE of 100 points is multimodal even for exact "
                                       "samples of the target; see the verdict line")
def test_08_mixture_density_modes():
    cfg = load_config(CONFIGS / "mixture_dusvgd.cfg")
    schedule = experiment("mixture_dusvgd").schedule
    cfg.run.iters, cfg.run.interval, cfg.run.trials = 100, 100, 1
    particles = run_experiment(cfg, schedule=schedule).particles[0]
    grid = np.linspace(-6.0, 7.0, 2601)
    modes = local_maxima(grid, kde(particles, 0.2, grid))
    ok = len(modes) == 2 and abs(modes[0] + 2.0) <= 0.5 and abs(modes[1] - 2.5) <= 0.5
    near = [bool(np.any(np.abs(modes - c) <= 0.5)) for c in (-2.0, 2.5)]
    rng = np.random.default_rng(8)
    exact = [len(local_maxima(grid, kde(GaussianMixture1D().sample(rng, 100), 0.2, grid))) for _ in range(20)]
    record(8, "mixture: KDE of trained-DUSVGD particles at 100 iterations has two maxima near -2 and 2.5", ok,
           f"{len(modes)} local maxima at {np.round(modes, 2).tolist()} (one within 0.5 of -2: {near[0]}, "
           f"of 2.5: {near[1]}); 100 exact target samples give {min(exact)}-{max(exact)} maxima")
    assert ok


@pytest.mark.slow
def test_09_logreg_accuracy():
    acc = {v: value_at(experiment(f"logreg_{v}"), 500) for v in ("fixed", "rmsprop", "dusvgd", "cdusvgd")}
    gain = {v: acc[v] - acc["fixed"] for v in ("dusvgd", "cdusvgd")}
    in_band = all(0.65 <= a <= 0.80 for a in acc.values())
    ok = in_band and all(g >= 0.01 for g in gain.values())
    record(9, "logistic regression: trained samplers beat fixed by >= 1 point, all in 65-80%", ok,
           "accuracy@500 " + ", ".join(f"{k} {v:.4f}" for k, v in acc.items()))
    assert ok


@pytest.mark.slow
def test_10_bnn_rmse():
    res = {v: experiment(f"bnn_{v}") for v in ("fixed", "rmsprop", "dusvgd")}
    at = {v: (value_at(r, 2000), value_at(r, 3000)) for v, r in res.items()}
    log3000 = {v: math.log10(a[1]) for v, a in at.items()}
    ordered = log3000["dusvgd"] < log3000["rmsprop"] < log3000["fixed"]
    dus_decreasing = at["dusvgd"][1] < at["dusvgd"][0]
    rms_drop = (at["rmsprop"][0] - at["rmsprop"][1]) / at["rmsprop"][0]
    ok = ordered and dus_decreasing and rms_drop < 0.10
    record(10, "BNN: log-RMSE ordering at 3000, trained still improving, RMSProp stalled", ok,
           "log10 RMSE@3000 " + ", ".join(f"{k} {v:.3f}" for k, v in log3000.items())
           + f"; dusvgd {at['dusvgd'][0]:.4f} -> {at['dusvgd'][1]:.4f}; rmsprop relative drop {rms_drop:.3f}")
    assert ok


# ---------------------------------------------------------------- 11: determinism


@pytest.mark.slow
def test_11_run_is_byte_identical(tmp_path):
    same = {}
    for name in ("logreg_fixed", "mixture_cdusvgd"):
        cfg = str(CONFIGS / f"{name}.cfg")
        for out in ("a", "b"):
            assert main(["run", "--config", cfg, "--threads", "1", "--out", str(tmp_path / name / out)]) == 0
        same[name] = all((tmp_path / name / "a" / f).read_bytes() == (tmp_path / name / "b" / f).read_bytes()
                         for f in ("curve.csv", "mean_curve.csv", "summary.kv", "schedule.kv"))
    ok = all(same.values())
    record(11, "determinism: repeated `run` gives byte-identical curve files", ok, str(same))
    assert ok
