import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dusvgd.errors import ConfigError, DataError
from dusvgd.targets import (
    BayesLogRegModel,
    BayesNNModel,
    GaussianMixture1D,
    GaussianTarget,
    ScoreModel,
    blr_predict,
    bnn_forward,
    bnn_predict,
)


def central_fd(f, x, step=1e-5):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        out[i] = (f(x + e) - f(x - e)) / (2 * step)
    return out


# ---------------------------------------------------------------- mixture


def test_gm_score_zero_at_midpoint():
    assert GaussianMixture1D().score(0.25) == pytest.approx(0.0, abs=1e-14)


def test_gm_score_far_left_limit():
    assert GaussianMixture1D().score(-10.0) == pytest.approx(8.0, abs=1e-6)


@pytest.mark.parametrize("x", [-3.0, 0.0, 1.0, 3.0])
def test_gm_score_matches_fd(x):
    gm = GaussianMixture1D()
    fd = central_fd(lambda v: gm.log_density(v)[0], [x])[0]
    assert gm.score(x) == pytest.approx(fd, rel=1e-6)


@given(st.floats(0, 8))
def test_gm_score_antisymmetric(delta):
    gm = GaussianMixture1D()
    assert gm.score(0.25 + delta) == pytest.approx(-gm.score(0.25 - delta), abs=1e-10)


@given(st.floats(1e-3, 1e3), st.floats(-8, 8))
def test_gm_weight_rescaling_invariance(c, x):
    a = GaussianMixture1D().score(x)
    b = GaussianMixture1D(weights=(0.75 * c, 0.75 * c)).score(x)
    assert b == pytest.approx(a, abs=1e-12)


def test_gm_batched_shapes():
    gm = GaussianMixture1D()
    X = np.linspace(-3, 3, 7)[:, None]
    s = gm.score(X)
    assert s.shape == (7, 1)
    assert s[3, 0] == pytest.approx(gm.score(0.0))


def test_gm_rejects_nonpositive_weights():
    with pytest.raises(ConfigError):
        GaussianMixture1D(weights=(0.5, 0.0))


def test_base_model_has_no_initial_distribution():
    with pytest.raises(ConfigError):
        ScoreModel().sample_init(np.random.default_rng(0), 3)


# ---------------------------------------------------------------- logistic regression


@pytest.fixture
def blr():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 4))
    t = np.where(rng.random(20) < 0.5, -1, 1)
    return BayesLogRegModel(X, t, a=1.0, b=0.01)


def test_blr_single_datum_likelihood_term():
    x = np.array([[1.0, -2.0]])
    model = BayesLogRegModel(x, np.array([1]), a=1.0, b=0.01)
    # w orthogonal to x: sigmoid(0) = 1/2; prior term -alpha*w
    w = np.array([2.0, 1.0])
    s = 0.0
    g = model.score(np.append(w, s))
    np.testing.assert_allclose(g[:2], (1 - 0.5) * x[0] - np.exp(s) * w)


def test_blr_zero_weights_prior_gradient_vanishes():
    x = np.array([[1.0, 3.0], [2.0, -1.0]])
    model = BayesLogRegModel(x, np.array([1, -1]))
    g = model.score(np.zeros(3))
    lik = (np.array([1.0, 0.0]) - 0.5) @ x
    np.testing.assert_allclose(g[:2], lik, atol=1e-15)


def test_blr_batch_scaling():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 0.5]])
    model = BayesLogRegModel(X, np.array([1, -1, 1, 1]))
    p = np.zeros(3)
    g = model.score(p, batch=[0])
    # only datum 0, scaled by N/|batch| = 4
    np.testing.assert_allclose(g[:2], 4 * 0.5 * X[0])


def test_blr_score_matches_fd_at_random_particles(blr):
    rng = np.random.default_rng(11)
    batch = np.array([0, 3, 5, 7, 8, 12, 19])
    for _ in range(5):
        p = np.append(rng.normal(size=4), rng.normal(scale=0.5))
        fd = central_fd(lambda v: blr.log_posterior(v, batch), p)
        np.testing.assert_allclose(blr.score(p, batch), fd, rtol=1e-5, atol=1e-8)


def test_blr_full_batch_is_deterministic(blr):
    p = np.random.default_rng(0).normal(size=(6, 5))
    np.testing.assert_array_equal(blr.score(p), blr.score(p, batch=np.arange(20)))


def test_blr_empty_batch_rejected(blr):
    with pytest.raises(ValueError):
        blr.score(np.zeros(5), batch=[])


def test_blr_label_validation():
    with pytest.raises(DataError):
        BayesLogRegModel(np.zeros((2, 2)), np.array([0, 1]))


def test_blr_predict():
    X = np.array([[1.0], [-1.0]])
    model = BayesLogRegModel(X, np.array([1, -1]))
    np.testing.assert_allclose(blr_predict(model, np.zeros((1, 2)), X), [0.5, 0.5])
    logit = math.log(0.8 / 0.2)
    parts = np.array([[logit, 0.0], [-logit, 0.0]])
    np.testing.assert_allclose(blr_predict(model, parts, np.array([[1.0]])), [0.5])


def test_blr_accuracy_on_toy_set():
    X = np.array([[2.0], [-1.0], [0.5], [-3.0]])
    t = np.array([1, 1, -1, -1])
    model = BayesLogRegModel(X, t)
    probs = blr_predict(model, np.array([[1.0, 0.0]]), X)
    pred = np.where(probs >= 0.5, 1, -1)
    # predictions +1, -1, +1, -1 against labels +1, +1, -1, -1: two correct
    assert np.mean(pred == t) == 0.5


def test_blr_init_layout(blr):
    P = blr.sample_init(np.random.default_rng(0), 7)
    assert P.shape == (7, 5)
    assert np.all(np.isfinite(P))


# ---------------------------------------------------------------- neural network


def oracle_forward(p, x, K, H):
    W1 = np.array(p[:K * H]).reshape(K, H)
    b1 = p[K * H:K * H + H]
    w2 = p[K * H + H:K * H + 2 * H]
    b2 = p[K * H + 2 * H]
    hidden = [max(0.0, sum(x[k] * W1[k, j] for k in range(K)) + b1[j]) for j in range(H)]
    return sum(w2[j] * hidden[j] for j in range(H)) + b2


@pytest.fixture
def bnn():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(10, 3))
    y = rng.normal(size=10)
    return BayesNNModel(X, y, hidden=6)


def test_bnn_dimension(bnn):
    assert bnn.dim == 3 * 6 + 2 * 6 + 1 + 2
    assert BayesNNModel(np.zeros((2, 14)), np.zeros(2)).dim == 14 * 50 + 101 + 2


def test_bnn_zero_weights_output_zero(bnn):
    assert bnn_forward(bnn, np.zeros(bnn.n_weights), np.ones(3)) == 0.0


def test_bnn_relu_clipping():
    model = BayesNNModel(np.zeros((1, 1)), np.zeros(1), hidden=1)
    assert bnn_forward(model, np.array([1.0, 0.0, 1.0, 0.0]), np.array([-3.0])) == 0.0
    assert bnn_forward(model, np.array([1.0, 0.0, 1.0, 0.0]), np.array([3.0])) == 3.0


def test_bnn_forward_matches_oracle(bnn):
    rng = np.random.default_rng(9)
    for _ in range(4):
        p = rng.normal(size=bnn.dim)
        x = rng.normal(size=3)
        assert bnn_forward(bnn, p, x) == pytest.approx(oracle_forward(p, x, 3, 6), abs=1e-12)


def test_bnn_forward_dimension_mismatch(bnn):
    with pytest.raises(ValueError):
        bnn_forward(bnn, np.zeros(bnn.dim), np.zeros(4))
    with pytest.raises(ValueError):
        bnn_forward(bnn, np.zeros(7), np.zeros(3))


def test_bnn_zero_weights_zero_targets_score():
    X = np.random.default_rng(1).normal(size=(5, 2))
    model = BayesNNModel(X, np.zeros(5), hidden=4)
    g = model.score(np.zeros(model.dim))
    np.testing.assert_array_equal(g[:model.n_weights], 0.0)


def test_bnn_gamma_doubling_scales_misfit(bnn):
    rng = np.random.default_rng(2)
    p = rng.normal(size=bnn.dim)
    p[-2] = -50.0  # lambda ~ 0 removes the prior pull on the weights
    q = p.copy()
    q[-1] += math.log(2.0)
    np.testing.assert_allclose(bnn.score(q)[:bnn.n_weights], 2 * bnn.score(p)[:bnn.n_weights], rtol=1e-12)


def test_bnn_score_matches_fd(bnn):
    rng = np.random.default_rng(4)
    batch = np.array([0, 2, 4, 5, 9])
    checked = 0
    while checked < 5:
        p = rng.normal(scale=0.7, size=bnn.dim)
        p[-2:] = rng.normal(scale=0.5, size=2)
        W1, b1, _, _ = bnn.unpack(p)
        pre = bnn.X[batch] @ W1[0] + b1[0]
        if np.min(np.abs(pre)) <= 1e-3:
            continue
        fd = central_fd(lambda v: bnn.log_posterior(v, batch), p)
        np.testing.assert_allclose(bnn.score(p, batch), fd, rtol=1e-4, atol=1e-6)
        checked += 1


def test_bnn_batched_score_equals_rowwise(bnn):
    P = np.random.default_rng(8).normal(size=(4, bnn.dim))
    batched = bnn.score(P, batch=[1, 2, 3])
    for i in range(4):
        np.testing.assert_allclose(batched[i], bnn.score(P[i], batch=[1, 2, 3]), rtol=1e-12)


def test_bnn_empty_batch_rejected(bnn):
    with pytest.raises(ValueError):
        bnn.score(np.zeros(bnn.dim), batch=np.array([], dtype=int))


def test_bnn_predict(bnn):
    X = np.random.default_rng(0).normal(size=(6, 3))
    np.testing.assert_array_equal(bnn_predict(bnn, np.zeros((1, bnn.dim)), X), np.zeros(6))
    p1 = np.zeros(bnn.dim)
    p1[bnn.n_weights - 1] = 1.0  # output bias
    p2 = p1.copy()
    p2[bnn.n_weights - 1] = 3.0
    np.testing.assert_allclose(bnn_predict(bnn, np.stack([p1, p2]), X), 2.0)


def test_bnn_predict_matches_loop(bnn):
    rng = np.random.default_rng(12)
    P = rng.normal(size=(5, bnn.dim))
    X = rng.normal(size=(4, 3))
    expected = [np.mean([oracle_forward(p, x, 3, 6) for p in P]) for x in X]
    np.testing.assert_allclose(bnn_predict(bnn, P, X), expected, atol=1e-12)


def test_bnn_init_is_finite(bnn):
    for init in ("prior", "fan_in"):
        model = BayesNNModel(bnn.X, bnn.y, hidden=6, init=init)
        P = model.sample_init(np.random.default_rng(0), 9)
        assert P.shape == (9, model.dim) and np.all(np.isfinite(P))


# ---------------------------------------------------------------- gaussian


def test_gaussian_target_score():
    g = GaussianTarget([2.0, 0.5])
    np.testing.assert_allclose(g.score(np.array([1.0, 1.0])), [-0.5, -2.0])
