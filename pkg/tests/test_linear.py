import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brcaml.linear import (
    DivergenceError,
    ElasticNetConfig,
    IrlsConfig,
    LinearModel,
    fit_irls_l1,
    fit_sgd_elasticnet,
    l1_objective,
    lambda_max,
    log_loss,
    rank_features,
    sigmoid,
    soft_threshold,
)


def test_sigmoid_examples():
    assert sigmoid(0.0) == 0.5
    assert 1 - 1e-12 < sigmoid(800.0) <= 1.0
    assert sigmoid(-800.0) >= 0.0


@given(st.floats(-700, 700))
def test_sigmoid_symmetry(t):
    assert sigmoid(t) + sigmoid(-t) == pytest.approx(1.0, abs=1e-15)


def test_soft_threshold_examples():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-0.5, 1.0) == 0.0
    assert soft_threshold(-3.0, 1.0) == -2.0


def test_configs_validate():
    with pytest.raises(ValueError):
        ElasticNetConfig(alpha=1.5)
    with pytest.raises(ValueError):
        IrlsConfig(lam=-1)
    with pytest.raises(ValueError):
        IrlsConfig(coord_tol=0)


def _toy(n=200, p=4, seed=0, beta=(1.5, -1.0, 0.0, 0.0)):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (rng.random(n) < sigmoid(X @ np.asarray(beta[:p]))).astype(float)
    return X, y


def test_sgd_large_lambda_constant():
    X, y = _toy()
    m = fit_sgd_elasticnet(X, y, ElasticNetConfig(lam=100.0, epochs=5))
    assert np.all(m.weights == 0)
    assert np.ptp(m.predict_proba(X)) == 0


def test_sgd_direction_1d():
    rng = np.random.default_rng(1)
    x = np.r_[rng.normal(-1, 1, 50), rng.normal(1, 1, 50)][:, None]
    y = np.r_[np.zeros(50), np.ones(50)]
    assert fit_sgd_elasticnet(x, y, ElasticNetConfig(lam=0.0, epochs=20)).weights[0] > 0
    assert fit_sgd_elasticnet(x, 1 - y, ElasticNetConfig(lam=0.0, epochs=20)).weights[0] < 0


def test_sgd_matches_gradient_descent_oracle(oracles):
    ref = oracles["sgd_gd_oracle"]
    X, y = np.array(ref["X"]), np.array(ref["y"])
    m = fit_sgd_elasticnet(X, y, ElasticNetConfig(lam=0.0, learning_rate=0.01, epochs=2000))
    assert abs(log_loss(m.margin(X), y) - ref["log_loss"]) < 1e-3


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_sgd_divergence_reported():
    X, y = _toy()
    with pytest.raises(DivergenceError, match="learning_rate"):
        fit_sgd_elasticnet(X * 1e200, y, ElasticNetConfig(lam=0.0, learning_rate=1e200, epochs=3))


def test_irls_newton_oracle(oracles):
    ref = oracles["irls_newton"]
    X, y = np.array(ref["X"]), np.array(ref["y"])
    m = fit_irls_l1(X, y, IrlsConfig(lam=0.0, coord_tol=1e-12))
    assert m.converged
    assert np.max(np.abs(m.weights - ref["weights"])) < 1e-4
    assert abs(m.intercept - ref["intercept"]) < 1e-4


def test_irls_lambda_max_zeroes(oracles):
    ref = oracles["irls_newton"]
    X, y = np.array(ref["X"]), np.array(ref["y"])
    assert lambda_max(X, y) == pytest.approx(ref["lambda_max"], rel=1e-12)
    for lam in (ref["lambda_max"], 2 * ref["lambda_max"]):
        assert np.all(fit_irls_l1(X, y, IrlsConfig(lam=lam)).weights == 0.0)


def test_irls_objective_monotone_and_sparsity_path():
    X, y = _toy(p=4)
    X = np.hstack([X, np.random.default_rng(9).normal(size=(200, 6))])
    counts = []
    for lam in np.logspace(-3, 0, 10):
        m = fit_irls_l1(X, y, IrlsConfig(lam=float(lam)))
        assert np.all(np.diff(m.history) <= 1e-10)
        counts.append(int(np.count_nonzero(m.weights)))
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 0 and counts[0] > 2


def test_irls_duplicate_columns():
    X, y = _toy(p=2, beta=(1.5, -1.0))
    lam = 0.05
    single = fit_irls_l1(X, y, IrlsConfig(lam=lam, coord_tol=1e-10))
    Xd = np.hstack([X[:, :1], X])
    dup = fit_irls_l1(Xd, y, IrlsConfig(lam=lam, coord_tol=1e-10))
    obj_s = l1_objective(single.weights, single.intercept, X, y, lam)
    obj_d = l1_objective(dup.weights, dup.intercept, Xd, y, lam)
    assert obj_d == pytest.approx(obj_s, abs=1e-6)
    assert abs(dup.weights[0]) + abs(dup.weights[1]) <= abs(single.weights[0]) + 1e-6


def test_irls_affine_invariance_at_zero_lambda():
    X, y = _toy(p=2, beta=(1.0, -0.5))
    raw = X * [3.0, 0.2] + [10.0, -4.0]
    z = (raw - raw.mean(0)) / raw.std(0)
    cfg = IrlsConfig(lam=0.0, coord_tol=1e-12)
    p1 = fit_irls_l1(z, y, cfg).predict_proba(z)
    p2 = fit_irls_l1(raw, y, cfg).predict_proba(raw)
    assert np.max(np.abs(p1 - p2)) < 1e-6
    assert np.all((p1 > 0) & (p1 < 1))


def test_rank_features_examples():
    m = LinearModel(np.array([0.1, -2.0, 0.0]), 0.0)
    assert [n for n, _ in rank_features(m, ["a", "b", "c"])] == ["b", "a", "c"]
    z = LinearModel(np.zeros(3), 0.0)
    assert [n for n, _ in rank_features(z, ["c", "a", "b"])] == ["a", "b", "c"]
    with pytest.raises(ValueError):
        rank_features(m, ["a"])


@pytest.mark.slow
def test_planted_feature_ranked_first():
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(200, 10))
        y = (rng.random(200) < sigmoid(2.0 * X[:, 3])).astype(float)
        m = fit_irls_l1(X, y, IrlsConfig(lam=0.02))
        hits += rank_features(m, [f"f{j}" for j in range(10)])[0][0] == "f3"
    assert hits >= 9


def test_model_json(tmp_path):
    m = LinearModel(np.array([0.5, -1.0]), 0.25)
    m.save(tmp_path / "m.json", names=["x", "y"])
    d = json.loads((tmp_path / "m.json").read_text())
    back = LinearModel.from_dict(d)
    assert back.intercept == 0.25 and back.weights.tolist() == [0.5, -1.0]
