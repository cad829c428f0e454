import numpy as np
import pytest

from brcaml.metrics import auc
from brcaml.trees import ForestConfig, RandomForest, Tree, fit_cart, fit_random_forest, forest_predict


def _blobs(n=120, p=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    y = (X[:, 0] + X[:, 1] + 0.3 * rng.normal(size=n) > 0).astype(float)
    return X, y


def test_pure_node_is_leaf():
    t = fit_cart(np.array([[1.0], [2.0]]), np.array([1.0, 1.0]))
    assert t.n_nodes == 1 and t.value[0] == 1.0


def test_middle_threshold():
    t = fit_cart(np.array([[1.0], [2.0], [3.0], [4.0]]), np.array([0.0, 0.0, 1.0, 1.0]))
    assert 2 < t.threshold[0] < 3
    assert t.predict(np.array([[1.5], [3.5]])).tolist() == [0.0, 1.0]


def test_depth_zero_is_base_rate():
    X, y = _blobs()
    t = fit_cart(X, y, max_depth=0)
    assert t.n_nodes == 1 and t.value[0] == pytest.approx(y.mean())


def test_tree_structure_invariants():
    X, y = _blobs()
    t = fit_cart(X, y, max_depth=3)
    assert t.depth() <= 3
    for i in range(t.n_nodes):
        if not t.is_leaf(i):
            assert t.left[i] >= 0 and t.right[i] >= 0 and np.isfinite(t.threshold[i])
    leaves = t.apply(X)
    assert all(t.is_leaf(i) for i in leaves)


def test_tree_round_trip():
    X, y = _blobs()
    t = fit_cart(X, y, max_depth=4)
    assert np.array_equal(Tree.from_dict(t.to_dict()).predict(X), t.predict(X))


def test_cart_errors():
    with pytest.raises(ValueError):
        fit_cart(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(ValueError):
        fit_cart(np.zeros((3, 2)), np.zeros(3), m_features=3)
    with pytest.raises(ValueError):
        ForestConfig(n_trees=0)


def test_single_tree_forest_equals_cart():
    X, y = _blobs()
    trees = fit_random_forest(X, y, ForestConfig(n_trees=1, bootstrap=False, seed=5))
    assert np.array_equal(forest_predict(trees, X), fit_cart(X, y, seed=5).predict(X))


def test_forest_determinism_and_range():
    X, y = _blobs()
    a = RandomForest(n_trees=20, seed=3).fit(X, y).predict_proba(X)
    b = RandomForest(n_trees=20, seed=3).fit(X, y).predict_proba(X)
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a <= 1))


def test_forest_parallel_matches_serial():
    X, y = _blobs()
    cfg = ForestConfig(n_trees=8, m_features=2, seed=1)
    serial = forest_predict(fit_random_forest(X, y, cfg), X)
    threaded = forest_predict(fit_random_forest(X, y, ForestConfig(n_trees=8, m_features=2, seed=1, n_jobs=4)), X)
    assert np.array_equal(serial, threaded)


def test_forest_halves_average():
    X, y = _blobs()
    trees = fit_random_forest(X, y, ForestConfig(n_trees=10, m_features=2, seed=0))
    full = forest_predict(trees, X)
    halves = (forest_predict(trees[:5], X) + forest_predict(trees[5:], X)) / 2
    assert np.allclose(full, halves, atol=1e-15)


@pytest.mark.slow
def test_relevant_feature_dilution():
    m1, mp = [], []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(300, 200))
        y = (X[:, 0] + 0.5 * rng.normal(size=300) > 0).astype(float)
        tr, te = slice(0, 200), slice(200, 300)
        for m, out in ((1, m1), (200, mp)):
            trees = fit_random_forest(X[tr], y[tr], ForestConfig(n_trees=10, m_features=m, max_depth=4, seed=seed))
            out.append(auc(forest_predict(trees, X[te]), y[te]))
    assert np.mean(mp) > np.mean(m1)
