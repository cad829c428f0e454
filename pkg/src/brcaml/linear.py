"""Logistic regression: SGD elastic net and IRLS with L1 coordinate descent."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DivergenceError(RuntimeError):
    pass


def sigmoid(t):
    """Overflow-safe logistic function; accepts scalars or arrays."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out if out.ndim else float(out)


def log_loss(margin, y) -> float:
    """Mean binary cross-entropy from raw margins, in log-sum-exp form."""
    margin = np.asarray(margin, dtype=float)
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def soft_threshold(z, gamma):
    return np.sign(z) * np.maximum(np.abs(z) - gamma, 0.0)


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    converged: bool = True
    n_iter: int = 0
    history: list[float] = field(default_factory=list, repr=False)

    def margin(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.weights + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return sigmoid(self.margin(X))

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else [f"x{j}" for j in range(len(self.weights))]
        return {"names": names, "weights": self.weights.tolist(), "intercept": float(self.intercept)}

    @classmethod
    def from_dict(cls, d) -> "LinearModel":
        return cls(np.array(d["weights"], dtype=float), float(d["intercept"]))

    def save(self, path: str | Path, names: Sequence[str] | None = None) -> None:
        Path(path).write_text(json.dumps(self.to_dict(names), indent=2), encoding="utf-8")


@dataclass(frozen=True)
class ElasticNetConfig:
    lam: float = 0.01
    alpha: float = 0.95
    learning_rate: float = 0.01
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")


def elasticnet_objective(model: LinearModel, X, y, lam: float, alpha: float) -> float:
    w = model.weights
    pen = lam * (alpha * np.abs(w).sum() + 0.5 * (1 - alpha) * (w @ w))
    return log_loss(model.margin(X), y) + pen


def fit_sgd_elasticnet(X, y, cfg: ElasticNetConfig = ElasticNetConfig()) -> LinearModel:
    """Per-sample SGD on mean log-loss with a proximal elastic-net step; intercept unpenalized."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    rng = np.random.default_rng(cfg.seed)
    w = np.zeros(p)
    b = 0.0
    lr = cfg.learning_rate
    l1_step = lr * cfg.lam * cfg.alpha
    l2_shrink = 1.0 / (1.0 + lr * cfg.lam * (1.0 - cfg.alpha))
    history = []
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            g = float(sigmoid(X[i] @ w + b)) - y[i]
            w -= lr * g * X[i]
            b -= lr * g
            if cfg.lam > 0:
                w = soft_threshold(w, l1_step) * l2_shrink
        loss = log_loss(X @ w + b, y)
        if not np.isfinite(loss) or not np.all(np.isfinite(w)):
            raise DivergenceError("SGD diverged; try a smaller learning_rate")
        history.append(loss)
    return LinearModel(w, b, True, cfg.epochs, history)


@dataclass(frozen=True)
class IrlsConfig:
    lam: float = 0.01
    max_outer_iters: int = 100
    coord_tol: float = 1e-8
    max_inner_sweeps: int = 1000
    weight_floor: float = 1e-8

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if not self.coord_tol > 0:
            raise ValueError("coord_tol must be positive")


def l1_objective(beta, b, X, y, lam) -> float:
    return log_loss(X @ beta + b, y) + lam * np.abs(beta).sum()


def lambda_max(X, y) -> float:
    """Smallest L1 strength for which the all-zero (intercept-only) fit is optimal."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.max(np.abs(X.T @ (y - y.mean()))) / len(y))


def _weighted_lasso_cd(X, z, w, beta, b, lam, tol, max_sweeps):
    """Cyclic coordinate descent for (1/2n) sum w (z - b - X beta)^2 + lam |beta|_1."""
    n, p = X.shape
    beta = beta.copy()
    xw2 = (w @ (X * X)) / n
    wsum = w.sum()
    r = z - b - X @ beta
    active = np.arange(p)
    full_sweep = True
    for _ in range(max_sweeps):
        delta = np.sum(w * r) / wsum
        b += delta
        r -= delta
        max_change = abs(delta)
        for j in (np.arange(p) if full_sweep else active):
            if xw2[j] == 0.0:
                continue
            old = beta[j]
            rho = (w * X[:, j]) @ r / n + xw2[j] * old
            new = soft_threshold(rho, lam) / xw2[j]
            if new != old:
                r -= X[:, j] * (new - old)
                beta[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            if full_sweep:
                break
            # active set settled; confirm with a full pass
            full_sweep = True
        else:
            full_sweep = False
            active = np.flatnonzero(beta != 0.0)
    return beta, b


def fit_irls_l1(X, y, cfg: IrlsConfig = IrlsConfig()) -> LinearModel:
    """L1-penalized logistic regression by iteratively reweighted least squares.

    Each outer step forms the quadratic approximation of the log-likelihood at
    the current coefficients (case weights p(1-p), working response) and
    solves the penalized weighted least-squares problem by coordinate descent
    with soft thresholding. A step-halving line search keeps the penalized
    objective non-increasing.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    ybar = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    beta = np.zeros(p)
    b = float(np.log(ybar / (1 - ybar)))
    obj = l1_objective(beta, b, X, y, cfg.lam)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, cfg.max_outer_iters + 1):
        eta = X @ beta + b
        prob = sigmoid(eta)
        w = np.maximum(prob * (1 - prob), cfg.weight_floor)
        z = eta + (y - prob) / w
        new_beta, new_b = _weighted_lasso_cd(X, z, w, beta, b, cfg.lam, cfg.coord_tol, cfg.max_inner_sweeps)

        step = 1.0
        new_obj = l1_objective(new_beta, new_b, X, y, cfg.lam)
        while new_obj > obj + 1e-12 and step > 1e-10:
            step *= 0.5
            cand_beta = beta + step * (new_beta - beta)
            cand_b = b + step * (new_b - b)
            new_obj = l1_objective(cand_beta, cand_b, X, y, cfg.lam)
            if new_obj <= obj + 1e-12:
                new_beta, new_b = cand_beta, cand_b
        if new_obj > obj + 1e-12:
            break

        change = max(np.max(np.abs(new_beta - beta), initial=0.0), abs(new_b - b))
        beta, b, obj = new_beta, new_b, new_obj
        history.append(obj)
        if change < cfg.coord_tol:
            converged = True
            break
    return LinearModel(beta, b, converged, it, history)


def rank_features(model: LinearModel, names: Sequence[str]) -> list[tuple[str, float]]:
    if len(names) != len(model.weights):
        raise ValueError("names length must match the weight count")
    pairs = [(str(n), float(w)) for n, w in zip(names, model.weights)]
    return sorted(pairs, key=lambda t: (-abs(t[1]), t[0]))


class SGDLogisticRegression:
    """Estimator wrapper for :func:`fit_sgd_elasticnet`."""

    def __init__(self, lam=0.01, alpha=0.95, learning_rate=0.01, epochs=50, seed=0):
        self.cfg = ElasticNetConfig(lam, alpha, learning_rate, epochs, seed)
        self.model_: LinearModel | None = None

    def fit(self, X, y):
        self.model_ = fit_sgd_elasticnet(X, y, self.cfg)
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(X)

    predict_score = predict_proba


class L1LogisticRegression:
    """Estimator wrapper for :func:`fit_irls_l1`."""

    def __init__(self, lam=0.01, max_outer_iters=100, coord_tol=1e-8):
        self.cfg = IrlsConfig(lam, max_outer_iters, coord_tol)
        self.model_: LinearModel | None = None

    def fit(self, X, y):
        self.model_ = fit_irls_l1(X, y, self.cfg)
        return self

    def predict_proba(self, X):
        return self.model_.predict_proba(X)

    predict_score = predict_proba
