"""K-nearest-neighbour vote fractions and a linear hinge-loss SVM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linear import DivergenceError, LinearModel


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _sq_dists(A, B):
    d = (A * A).sum(1)[:, None] - 2.0 * A @ B.T + (B * B).sum(1)[None, :]
    return np.maximum(d, 0.0)


def knn_scores(train_X, train_y, queries, cfg: KnnConfig) -> np.ndarray:
    """Fraction of positive labels among the k nearest (Euclidean) training rows.

    Distance ties are resolved by training-row index.
    """
    train_X = np.asarray(train_X, dtype=float)
    train_y = np.asarray(train_y)
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    n = len(train_X)
    if n == 0:
        raise ValueError("empty training set")
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds the {n} training rows")
    out = np.empty(len(queries))
    # chunk queries so the distance block stays small
    for s in range(0, len(queries), 512):
        d = _sq_dists(queries[s:s + 512], train_X)
        # exact copies of a training point must compare equal despite round-off
        d[d < 1e-12] = 0.0
        nn = np.argsort(d, axis=1, kind="stable")[:, :cfg.k]
        out[s:s + 512] = (train_y[nn] == 1).mean(axis=1)
    return out


def knn_score(train_X, train_y, query, cfg: KnnConfig) -> float:
    return float(knn_scores(train_X, train_y, np.asarray(query, dtype=float)[None, :], cfg)[0])


class KNNClassifier:
    def __init__(self, k=5):
        self.cfg = KnnConfig(int(k))

    def fit(self, X, y):
        self.X_ = np.asarray(X, dtype=float)
        self.y_ = np.asarray(y)
        if self.cfg.k > len(self.X_):
            raise ValueError(f"k={self.cfg.k} exceeds the {len(self.X_)} training rows")
        return self

    def predict_proba(self, X):
        return knn_scores(self.X_, self.y_, X, self.cfg)

    predict_score = predict_proba


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    epochs: int = 50
    seed: int = 0
    eta0: float = 0.1
    average: bool = True

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("C must be positive")


def svm_objective(w, b, X, y, C) -> float:
    margins = 1.0 - y * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(margins, 0.0).sum())


def fit_linear_svm(X, y, cfg: SvmConfig = SvmConfig(), return_trace: bool = False):
    """Stochastic subgradient descent on 0.5|w|^2 + C sum hinge(1 - y(w.x + b)).

    Works on the equivalent normalized objective (lam/2)|w|^2 + mean hinge with
    lam = 1/(nC), step eta_t = eta0 / (1 + eta0 lam t), and averages iterates
    after the first epoch. ``y`` must be in {-1, +1}.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not set(np.unique(y).tolist()) <= {-1.0, 1.0}:
        raise ValueError("SVM labels must be -1/+1")
    n, p = X.shape
    lam = 1.0 / (n * cfg.C)
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(p)
    b = 0.0
    w_avg, b_avg, n_avg = np.zeros(p), 0.0, 0
    t = 0
    trace = []
    for epoch in range(cfg.epochs):
        for i in rng.permutation(n):
            eta = cfg.eta0 / (1.0 + cfg.eta0 * lam * t)
            viol = y[i] * (X[i] @ w + b) < 1.0
            w *= 1.0 - eta * lam
            if viol:
                w += eta * y[i] * X[i]
                b += eta * y[i]
            t += 1
            if cfg.average and epoch > 0:
                n_avg += 1
                w_avg += (w - w_avg) / n_avg
                b_avg += (b - b_avg) / n_avg
        if not np.all(np.isfinite(w)) or not np.isfinite(b):
            raise DivergenceError("SVM weights became non-finite")
        if return_trace:
            cw, cb = (w_avg, b_avg) if (cfg.average and n_avg) else (w, b)
            trace.append(svm_objective(cw, cb, X, y, cfg.C))
    if cfg.average and n_avg:
        w, b = w_avg, b_avg
    model = LinearModel(w.copy(), float(b), True, cfg.epochs)
    return (model, trace) if return_trace else model


class LinearSVM:
    """Scores are raw margins w.x + b."""

    def __init__(self, C=1.0, epochs=50, seed=0):
        self.cfg = SvmConfig(float(C), epochs, seed)

    def fit(self, X, y):
        y = np.where(np.asarray(y) == 1, 1.0, -1.0)
        self.model_ = fit_linear_svm(X, y, self.cfg)
        return self

    def predict_score(self, X):
        return self.model_.margin(X)
