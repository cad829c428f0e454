"""Self-training and co-training wrappers around probabilistic base learners."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

import numpy as np


class SemiSupervisedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelfTrainConfig:
    confidence_alpha: float = 0.9
    max_iters: int = 50

    def __post_init__(self):
        if not 0.5 < self.confidence_alpha <= 1.0:
            raise ValueError("confidence_alpha must lie in (0.5, 1]")


@dataclass
class SelfTrainResult:
    model: object
    converged: bool
    n_iter: int
    pseudo_labeled: np.ndarray  # indices into U used in the final fit
    history: list[int] = field(default_factory=list)  # |U'| per iteration

    def predict_proba(self, X):
        return self.model.predict_proba(X)


def _hard(prob) -> np.ndarray:
    return (np.asarray(prob) >= 0.5).astype(int)


def self_train(make_learner: Callable[[], object], X_l, y_l, X_u, cfg: SelfTrainConfig = SelfTrainConfig()) -> SelfTrainResult:
    """Fit on L, then repeatedly refit on L plus the confident part of U until U's predictions stop changing.

    Confidence of a prediction is max(p, 1 - p); pseudo-labels are the
    current hard predictions.
    """
    X_l = np.asarray(X_l, dtype=float)
    y_l = np.asarray(y_l, dtype=int)
    if set(y_l.tolist()) != {0, 1}:
        raise SemiSupervisedError("labeled pool must contain both classes")
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1])

    model = make_learner().fit(X_l, y_l)
    if len(X_u) == 0:
        return SelfTrainResult(model, True, 0, np.array([], dtype=int))
    prob = model.predict_proba(X_u)
    current, previous = _hard(prob), None
    chosen = np.array([], dtype=int)
    history = []
    it = 0
    while previous is None or not np.array_equal(current, previous):
        if it >= cfg.max_iters:
            return SelfTrainResult(model, False, it, chosen, history)
        conf = np.maximum(prob, 1.0 - prob)
        chosen = np.flatnonzero(conf > cfg.confidence_alpha)
        history.append(int(chosen.size))
        X_fit = np.vstack([X_l, X_u[chosen]])
        y_fit = np.r_[y_l, current[chosen]]
        model = make_learner().fit(X_fit, y_fit)
        previous = current
        prob = model.predict_proba(X_u)
        current = _hard(prob)
        it += 1
    return SelfTrainResult(model, True, it, chosen, history)


@dataclass(frozen=True)
class ViewSpec:
    views: tuple[tuple[int, ...], ...]
    max_rounds: int = 10

    def __post_init__(self):
        if len(self.views) < 1 or any(len(v) == 0 for v in self.views):
            raise ValueError("each view needs at least one feature")

    @property
    def n_views(self) -> int:
        return len(self.views)


@dataclass
class CoTrainResult:
    models: list
    views: ViewSpec
    added: np.ndarray  # U indices appended to the training set, in order
    added_labels: np.ndarray
    sizes: list[int]  # training-set size after each round (same for every view)

    def predict_proba(self, X, hard: bool = False):
        return vote_predict(self.models, X, self.views, hard)


def co_train(make_learner: Callable[[], object], X_l, y_l, X_u, views: ViewSpec) -> CoTrainResult:
    """Per-view learners label unlabeled rows for each other where they all agree.

    Each round fits every view on the shared training set, predicts U, and
    appends (once, with the agreed label) every not-yet-added row on which all
    views agree. The returned models are those from the last fit.
    """
    X_l = np.asarray(X_l, dtype=float)
    y_l = np.asarray(y_l, dtype=int)
    if set(y_l.tolist()) != {0, 1}:
        raise SemiSupervisedError("labeled pool must contain both classes")
    X_u = np.asarray(X_u, dtype=float).reshape(-1, X_l.shape[1])
    p = X_l.shape[1]
    for v in views.views:
        if min(v) < 0 or max(v) >= p:
            raise ValueError(f"view {v} references a missing feature")
    cols = [np.asarray(v, dtype=int) for v in views.views]

    pool = np.ones(len(X_u), dtype=bool)
    added: list[int] = []
    added_y: list[int] = []
    sizes = [len(y_l)]

    def fit_all():
        X_fit = np.vstack([X_l, X_u[added]]) if added else X_l
        y_fit = np.r_[y_l, np.asarray(added_y, dtype=int)]
        out = []
        for k, c in enumerate(cols):
            if set(y_fit.tolist()) != {0, 1}:
                raise SemiSupervisedError(f"view {k} lost a class at round {len(sizes)}")
            out.append(make_learner().fit(X_fit[:, c], y_fit))
        return out

    models = fit_all()
    for r in range(views.max_rounds):
        if r > 0:
            models = fit_all()
        cand = np.flatnonzero(pool)
        if cand.size == 0:
            sizes.append(sizes[-1])
            continue
        preds = np.array([_hard(m.predict_proba(X_u[cand][:, c])) for m, c in zip(models, cols)])
        agree = np.all(preds == preds[0], axis=0)
        new = cand[agree]
        added.extend(new.tolist())
        added_y.extend(preds[0, agree].tolist())
        pool[new] = False
        sizes.append(len(y_l) + len(added))
    return CoTrainResult(models, views, np.array(added, dtype=int), np.array(added_y, dtype=int), sizes)


def vote_predict(models: Sequence, X, views: ViewSpec, hard: bool = False) -> np.ndarray:
    """Soft vote = mean of per-view probabilities; hard vote = fraction of views voting class 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(models) != views.n_views:
        raise ValueError("need one classifier per view")
    probs = np.array([m.predict_proba(X[:, list(v)]) for m, v in zip(models, views.views)])
    if hard:
        return _hard(probs).mean(axis=0)
    return probs.mean(axis=0)


def enumerate_two_views(groups: Sequence[Sequence[int]]) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All splits of the groups into two non-empty views, each split listed once.

    Groups keep one-hot spans intact. Views are returned as
    ``(group indices of view A, group indices of view B)``; for three groups
    the order is a|bc, b|ac, c|ab.
    """
    g = len(groups)
    if g < 2:
        return []
    out = []
    everything = tuple(range(g))
    for size in range(1, g // 2 + 1):
        for a in combinations(everything, size):
            if 2 * size == g and 0 not in a:
                continue
            b = tuple(i for i in everything if i not in a)
            out.append((a, b))
    return out


def views_from_groups(groups: Sequence[Sequence[int]], split, max_rounds: int = 10) -> ViewSpec:
    a, b = split
    cols_a = tuple(sorted(c for i in a for c in groups[i]))
    cols_b = tuple(sorted(c for i in b for c in groups[i]))
    return ViewSpec((cols_a, cols_b), max_rounds)


class SelfTrainingClassifier:
    """Estimator facade: fits self-training with a fixed unlabeled pool."""

    def __init__(self, make_learner, X_unlabeled, alpha=0.9, max_iters=50):
        self.make_learner = make_learner
        self.X_u = X_unlabeled
        self.cfg = SelfTrainConfig(alpha, max_iters)

    def fit(self, X, y):
        self.result_ = self_train(self.make_learner, X, y, self.X_u, self.cfg)
        return self

    def predict_proba(self, X):
        return self.result_.predict_proba(X)

    predict_score = predict_proba


class CoTrainingClassifier:
    def __init__(self, make_learner, X_unlabeled, views: ViewSpec, hard_vote=False):
        self.make_learner = make_learner
        self.X_u = X_unlabeled
        self.views = views
        self.hard_vote = hard_vote

    def fit(self, X, y):
        self.result_ = co_train(self.make_learner, X, y, self.X_u, self.views)
        return self

    def predict_proba(self, X):
        return self.result_.predict_proba(X, self.hard_vote)

    predict_score = predict_proba
