import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brcaml.baselines import KnnConfig, LinearSVM, SvmConfig, fit_linear_svm, knn_score, knn_scores, svm_objective
from brcaml.metrics import auc


def test_knn_examples():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [5.0, 5.0]])
    y = np.array([1, 1, 0, 0])
    assert knn_score(X, y, [5.0, 5.0], KnnConfig(1)) == 0.0
    assert knn_score(X, y, [0.0, 0.0], KnnConfig(1)) == 1.0
    assert knn_score(X, y, [0.1, 0.1], KnnConfig(3)) == pytest.approx(2 / 3)
    assert knn_score(X, y, [100.0, -3.0], KnnConfig(4)) == 0.5


def test_knn_errors():
    with pytest.raises(ValueError):
        KnnConfig(0)
    with pytest.raises(ValueError):
        knn_scores(np.zeros((0, 2)), np.zeros(0), [[0.0, 0.0]], KnnConfig(1))
    with pytest.raises(ValueError):
        knn_scores(np.zeros((2, 2)), np.zeros(2), [[0.0, 0.0]], KnnConfig(3))


def test_knn_tie_broken_by_index():
    X = np.array([[1.0], [-1.0]])
    assert knn_score(X, np.array([1, 0]), [0.0], KnnConfig(1)) == 1.0
    assert knn_score(X, np.array([0, 1]), [0.0], KnnConfig(1)) == 0.0


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_knn_permutation_invariance(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 3))
    y = rng.integers(0, 2, 20)
    Q = rng.normal(size=(5, 3))
    perm = rng.permutation(20)
    a = knn_scores(X, y, Q, KnnConfig(k))
    b = knn_scores(X[perm], y[perm], Q, KnnConfig(k))
    assert np.array_equal(a, b)


@given(st.integers(0, 10_000))
def test_knn_k1_recovers_own_label(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(15, 2))
    y = rng.integers(0, 2, 15)
    assert np.array_equal(knn_scores(X, y, X, KnnConfig(1)), y.astype(float))


def _separable(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal([2, 2], 0.5, (20, 2)), rng.normal([-2, -2], 0.5, (20, 2))])
    return X, np.r_[np.ones(20), -np.ones(20)]


def test_svm_separable_large_c():
    X, y = _separable()
    m = fit_linear_svm(X, y, SvmConfig(C=100.0, epochs=50))
    assert np.mean(np.sign(m.margin(X)) == y) == 1.0


def test_svm_tiny_c_is_constant():
    X, y = _separable()
    m = fit_linear_svm(X, y, SvmConfig(C=1e-9, epochs=5))
    assert np.linalg.norm(m.weights) < 1e-6
    s = np.round(m.margin(X), 6)
    assert auc(s, (y > 0).astype(int)) == 0.5


def test_svm_near_grid_oracle(oracles):
    ref = oracles["svm_grid"]
    X, y = np.array(ref["X"]), np.array(ref["y"])
    m = fit_linear_svm(X, y, SvmConfig(C=ref["C"], epochs=300))
    obj = svm_objective(m.weights, m.intercept, X, y, ref["C"])
    assert obj >= ref["objective"] - 1e-6
    assert (obj - ref["objective"]) / ref["objective"] < 0.02


def test_svm_objective_trend(oracles):
    ref = oracles["svm_grid"]
    X, y = np.array(ref["X"]), np.array(ref["y"])
    _, trace = fit_linear_svm(X, y, SvmConfig(C=ref["C"], epochs=60), return_trace=True)
    t = np.array(trace[1:])  # averaging starts after the first epoch
    assert np.all(t[1:] <= t[:-1] * 1.05)
    windows = t[: len(t) // 10 * 10].reshape(-1, 10).mean(axis=1)
    assert np.all(np.diff(windows) < 0)


def test_svm_labels_checked():
    with pytest.raises(ValueError):
        fit_linear_svm(np.zeros((2, 1)), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        SvmConfig(C=0)


def test_svm_estimator_uses_margin():
    X, y = _separable()
    est = LinearSVM(C=1.0).fit(X, (y > 0).astype(int))
    assert auc(est.predict_score(X), (y > 0).astype(int)) == 1.0
