"""Registered learners: default grids, simplicity direction, and estimator factories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .baselines import KNNClassifier, LinearSVM
from .boosting import GradientBooster
from .goa import GoaParams, goa_train_mlp
from .linear import L1LogisticRegression, SGDLogisticRegression
from .mlp import MLPClassifier, MlpArch, hidden_layout
from .semisup import CoTrainingClassifier, SelfTrainingClassifier, ViewSpec
from .trees import RandomForest
from .validation import TunableLearner


class GoaMLPClassifier:
    """MLP whose flattened weights are searched by the grasshopper optimizer.

    A ``holdout_fraction`` of the training rows is set aside to drive the
    patience-based early stop.
    """

    def __init__(self, hidden=(8,), n_agents=30, max_iters=100, weight_bound=5.0,
                 patience=30, holdout_fraction=0.15, seed=0):
        self.hidden = tuple(hidden)
        self.params = GoaParams(n_agents=int(n_agents), max_iters=int(max_iters),
                                patience=int(patience), seed=seed)
        self.weight_bound = weight_bound
        self.holdout_fraction = holdout_fraction
        self.seed = seed

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        arch = MlpArch.build(X.shape[1], self.hidden)
        Xv = yv = None
        if self.holdout_fraction > 0:
            rng = np.random.default_rng([self.seed, 7])
            perm = rng.permutation(len(X))
            k = max(2, int(round(self.holdout_fraction * len(X))))
            hold, keep = perm[:k], perm[k:]
            X, y, Xv, yv = X[keep], y[keep], X[hold], y[hold]
        self.model_, self.result_ = goa_train_mlp(X, y, arch, self.params, self.weight_bound,
                                                  Xv, yv, return_result=True)
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(X)

    predict_score = predict_proba


class SparseOneHotBooster(GradientBooster):
    """Booster that treats zeros inside one-hot columns as missing values.

    Each split on an indicator then learns a default direction for the
    absent category instead of thresholding 0 against 1.
    """

    def __init__(self, onehot_columns, **kwargs):
        super().__init__(**kwargs)
        self.onehot_columns = np.asarray(onehot_columns, dtype=int)

    def _mask(self, X):
        X = np.asarray(X, dtype=float)
        m = np.zeros(X.shape, dtype=bool)
        m[:, self.onehot_columns] = X[:, self.onehot_columns] == 0.0
        return m

    def fit(self, X, y, missing=None):
        return super().fit(X, y, self._mask(X))

    def predict_proba(self, X, missing=None):
        return super().predict_proba(X, self._mask(X))

    predict_score = predict_proba


@dataclass
class LearnerContext:
    """Run-level data some learners need beyond (X, y)."""

    X_unlabeled: np.ndarray | None = None
    views: ViewSpec | None = None
    onehot_columns: tuple[int, ...] = ()


@dataclass(frozen=True)
class LearnerDef:
    name: str
    label: str
    param: str
    grid: tuple
    simpler: str
    build: Callable[[Any, int, dict, LearnerContext], Any]
    defaults: dict = field(default_factory=dict)
    mode: str = "cv"  # "cv" = nested CV, "repeated" = repeated train/val/test runs


def _irls_base(lam, tol):
    return lambda: L1LogisticRegression(lam=lam, coord_tol=tol)


def _mlp_hidden(opt):
    return hidden_layout(opt["hidden"], opt["hidden_layout"], opt["layer_width"])


def _booster(n_rounds, seed, o, c):
    kw = dict(lam=o["lam"], gamma=o["gamma"], eta=o["eta"], n_rounds=int(n_rounds), max_depth=o["max_depth"],
              min_child_weight=o["min_child_weight"], approx_epsilon=o["approx_epsilon"],
              split_mode=o["split_mode"], seed=seed)
    if o["sparse_onehot"]:
        return SparseOneHotBooster(c.onehot_columns, **kw)
    return GradientBooster(**kw)


REGISTRY: dict[str, LearnerDef] = {
    d.name: d
    for d in [
        LearnerDef("knn", "K-Nearest Neighbors", "k", (1, 3, 5, 9, 15, 25), "larger",
                   lambda p, s, o, c: KNNClassifier(k=int(p))),
        LearnerDef("logreg", "Logistic Regression (elastic net, SGD)", "lam",
                   (1e-4, 1e-3, 1e-2, 1e-1, 1.0), "larger",
                   lambda p, s, o, c: SGDLogisticRegression(p, o["alpha"], o["learning_rate"], o["epochs"], s),
                   {"alpha": 0.95, "learning_rate": 0.01, "epochs": 20}),
        LearnerDef("svm", "Linear SVM", "C", (1e-3, 1e-2, 1e-1, 1.0, 10.0), "smaller",
                   lambda p, s, o, c: LinearSVM(C=p, epochs=o["epochs"], seed=s), {"epochs": 20}),
        LearnerDef("mlp", "MLP (backprop)", "l2_lambda", (1e-4, 1e-3, 1e-2, 1e-1), "larger",
                   lambda p, s, o, c: MLPClassifier(_mlp_hidden(o), p, o["learning_rate"], o["epochs"], s),
                   {"hidden": 70, "hidden_layout": "units", "layer_width": 8,
                    "learning_rate": 0.05, "epochs": 200}),
        LearnerDef("forest", "Random Forest", "n_trees", (10, 30), "smaller",
                   lambda p, s, o, c: RandomForest(n_trees=int(p), m_features=o["m_features"],
                                                   max_depth=o["max_depth"],
                                                   min_samples_leaf=o["min_samples_leaf"], seed=s),
                   {"m_features": None, "max_depth": None, "min_samples_leaf": 1}),
        LearnerDef("irls_l1", "L1 Logistic Regression (IRLS)", "lam",
                   tuple(float(v) for v in np.round(np.logspace(-2, -0.5, 6), 8)), "larger",
                   lambda p, s, o, c: L1LogisticRegression(lam=p, coord_tol=o["coord_tol"]),
                   {"coord_tol": 1e-6}),
        LearnerDef("self_training", "Self-Training (L1 LR)", "lam", (0.01, 0.03, 0.1), "larger",
                   lambda p, s, o, c: SelfTrainingClassifier(_irls_base(p, o["coord_tol"]), c.X_unlabeled,
                                                             o["alpha"], o["max_iters"]),
                   {"alpha": 0.9, "max_iters": 20, "coord_tol": 1e-6}),
        LearnerDef("co_training", "Co-Training (L1 LR)", "lam", (0.01, 0.1), "larger",
                   lambda p, s, o, c: CoTrainingClassifier(_irls_base(p, o["coord_tol"]), c.X_unlabeled,
                                                           ViewSpec(c.views.views, o["rounds"])),
                   {"rounds": 5, "max_view_pairs": 4, "coord_tol": 1e-6}),
        LearnerDef("goa_mlp", "Grasshopper MLP", "seed", (), "larger",
                   lambda p, s, o, c: GoaMLPClassifier(_mlp_hidden(o), o["n_agents"], o["max_iters"],
                                                       o["weight_bound"], o["patience"],
                                                       o["holdout_fraction"], s),
                   {"hidden": 8, "hidden_layout": "units", "layer_width": 8, "n_agents": 30,
                    "max_iters": 100, "weight_bound": 5.0, "patience": 30,
                    "holdout_fraction": 0.15, "repeats": 3},
                   mode="repeated"),
        LearnerDef("boost", "XGBoost-style Booster", "n_rounds", (25, 50, 100), "smaller",
                   lambda p, s, o, c: _booster(p, s, o, c),
                   {"lam": 1.0, "gamma": 0.0, "eta": 0.1, "max_depth": 3, "min_child_weight": 1e-3,
                    "approx_epsilon": 0.05, "split_mode": "exact", "sparse_onehot": False}),
    ]
}


def resolve_options(defn: LearnerDef, overrides: dict) -> tuple[tuple, dict]:
    """Merge user overrides into defaults; returns (grid, options). Raises KeyError on unknown keys."""
    unknown = set(overrides) - set(defn.defaults) - {"grid"}
    if unknown:
        raise KeyError(f"learner {defn.name!r} has no option(s) {sorted(unknown)}")
    grid = tuple(overrides.get("grid", defn.grid))
    return grid, {**defn.defaults, **{k: v for k, v in overrides.items() if k != "grid"}}


def tunable(defn: LearnerDef, grid: tuple, options: dict, context: LearnerContext) -> TunableLearner:
    return TunableLearner(defn.name, lambda p, s: defn.build(p, s, options, context), grid, defn.simpler)
