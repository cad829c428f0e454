import numpy as np
import pytest

from brcaml.linear import L1LogisticRegression
from brcaml.semisup import (
    SelfTrainConfig,
    SelfTrainingClassifier,
    SemiSupervisedError,
    ViewSpec,
    co_train,
    enumerate_two_views,
    self_train,
    views_from_groups,
    vote_predict,
)


class Const:
    def __init__(self, p):
        self.p = p

    def fit(self, X, y):
        return self

    def predict_proba(self, X):
        return np.full(len(X), self.p)


def _two_clusters(seed=0):
    rng = np.random.default_rng(seed)
    X_l = np.array([[-3.0], [-2.5], [2.5], [3.0]])
    y_l = np.array([0, 0, 1, 1])
    X_u = np.r_[rng.normal(-3, 0.3, 20), rng.normal(3, 0.3, 20)][:, None]
    return X_l, y_l, X_u


def _lr():
    return L1LogisticRegression(lam=0.01)


def test_self_train_empty_unlabeled():
    X_l, y_l, _ = _two_clusters()
    r = self_train(_lr, X_l, y_l, np.zeros((0, 1)))
    base = _lr().fit(X_l, y_l)
    assert r.converged and r.n_iter == 0
    assert np.array_equal(r.predict_proba(X_l), base.predict_proba(X_l))


def test_self_train_alpha_one_equals_labeled_fit():
    X_l, y_l, X_u = _two_clusters()
    r = self_train(_lr, X_l, y_l, X_u, SelfTrainConfig(confidence_alpha=1.0))
    base = _lr().fit(X_l, y_l)
    assert r.pseudo_labeled.size == 0 and r.n_iter == 1
    grid = np.linspace(-5, 5, 21)[:, None]
    assert np.array_equal(r.predict_proba(grid), base.predict_proba(grid))


def test_self_train_two_clusters_fixed_point():
    X_l, y_l, X_u = _two_clusters()
    r = self_train(_lr, X_l, y_l, X_u, SelfTrainConfig(0.9, 20))
    assert r.converged and r.n_iter <= 3
    boundary = -r.model.model_.intercept / r.model.model_.weights[0]
    assert -2.0 < boundary < 2.0
    # one more pass changes nothing on U
    again = _lr().fit(np.vstack([X_l, X_u[r.pseudo_labeled]]),
                      np.r_[y_l, (r.predict_proba(X_u[r.pseudo_labeled]) >= 0.5).astype(int)])
    assert np.array_equal(again.predict_proba(X_u) >= 0.5, r.predict_proba(X_u) >= 0.5)


def test_self_train_errors_and_cap():
    with pytest.raises(SemiSupervisedError):
        self_train(_lr, np.zeros((2, 1)), np.array([1, 1]), np.zeros((1, 1)))
    with pytest.raises(ValueError):
        SelfTrainConfig(confidence_alpha=0.5)


def test_self_train_non_convergence_flag():
    flip = {"n": 0}

    class Flipper:
        def fit(self, X, y):
            flip["n"] += 1
            return self

        def predict_proba(self, X):
            return np.full(len(X), 0.95 if flip["n"] % 2 else 0.05)

    r = self_train(Flipper, np.zeros((2, 1)), np.array([0, 1]), np.zeros((3, 1)), SelfTrainConfig(0.9, 4))
    assert not r.converged and r.n_iter == 4


def test_classifier_facade():
    X_l, y_l, X_u = _two_clusters()
    est = SelfTrainingClassifier(_lr, X_u, alpha=0.9, max_iters=10).fit(X_l, y_l)
    assert est.predict_score(X_l).shape == (4,)


def _views_data(seed=0, n_l=30, n_u=200):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n_l + n_u)
    X = np.c_[y + rng.normal(0, 0.8, len(y)), y + rng.normal(0, 0.8, len(y))]
    return X[:n_l], y[:n_l], X[n_l:]


def test_co_train_zero_rounds_equals_l_only():
    X_l, y_l, X_u = _views_data()
    r = co_train(_lr, X_l, y_l, X_u, ViewSpec(((0,), (1,)), max_rounds=0))
    assert r.sizes == [len(y_l)] and r.added.size == 0
    solo = _lr().fit(X_l[:, [0]], y_l)
    assert np.array_equal(r.models[0].predict_proba(X_u[:, [0]]), solo.predict_proba(X_u[:, [0]]))


def test_co_train_disagreeing_views_never_grow():
    X_l, y_l, X_u = _views_data()
    makers = iter([Const(0.9), Const(0.1)] * 10)
    r = co_train(lambda: next(makers), X_l, y_l, X_u, ViewSpec(((0,), (1,)), max_rounds=3))
    assert r.sizes == [len(y_l)] * 4


def test_co_train_growth_and_pool_discipline():
    X_l, y_l, X_u = _views_data(1)
    r = co_train(_lr, X_l, y_l, X_u, ViewSpec(((0,), (1,)), max_rounds=5))
    assert all(b >= a for a, b in zip(r.sizes, r.sizes[1:]))
    assert r.sizes[-1] <= len(y_l) + len(X_u)
    assert len(set(r.added.tolist())) == r.added.size


def test_vote_predict_examples():
    X = np.zeros((1, 3))
    same = vote_predict([Const(0.3), Const(0.3)], X, ViewSpec(((0,), (1,))))
    assert same[0] == pytest.approx(0.3)
    assert vote_predict([Const(0.9), Const(0.1)], X, ViewSpec(((0,), (1,))))[0] == pytest.approx(0.5)
    hard = vote_predict([Const(0.8), Const(0.7), Const(0.2)], X, ViewSpec(((0,), (1,), (2,))), hard=True)
    assert hard[0] == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        vote_predict([Const(0.5)], X, ViewSpec(((0,), (1,))))


def test_enumerate_two_views(oracles):
    assert enumerate_two_views([[0], [1], [2]]) == [((0,), (1, 2)), ((1,), (0, 2)), ((2,), (0, 1))]
    for g, count in oracles["two_view_counts"].items():
        splits = enumerate_two_views([[i] for i in range(int(g))])
        assert len(splits) == count
        assert len({frozenset([a, b]) for a, b in splits}) == count
    assert enumerate_two_views([[0]]) == []


def test_views_keep_spans_intact():
    groups = [(0, 1, 2), (3,), (4, 5)]
    v = views_from_groups(groups, ((0,), (1, 2)))
    assert v.views == ((0, 1, 2), (3, 4, 5))
    with pytest.raises(ValueError):
        ViewSpec(((), (1,)))
