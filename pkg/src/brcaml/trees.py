"""Array-backed decision trees, Gini CART, and a bagged random forest."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

LEAF = -1


@dataclass
class Tree:
    """Flat binary tree. Node ``i`` is a leaf when ``feature[i] == -1``.

    Rows with ``x[feature] < threshold`` go left; missing values follow
    ``default_left``. ``stats`` holds optional per-node diagnostics.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    default_left: np.ndarray
    value: np.ndarray
    stats: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] == LEAF

    def depth(self) -> int:
        def rec(i):
            return 0 if self.is_leaf(i) else 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)

    def apply(self, X, missing=None) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if missing is None:
            missing = np.isnan(X)
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            inner = feat != LEAF
            if not inner.any():
                return node
            r, n, f = rows[inner], node[inner], feat[inner]
            miss = missing[r, f]
            go_left = np.where(miss, self.default_left[n], X[r, f] < self.threshold[n])
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X, missing=None) -> np.ndarray:
        return self.value[self.apply(X, missing)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "default_left": [bool(d) for d in self.default_left],
            "value": [float(v) for v in self.value],
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            np.array(d["feature"], dtype=int),
            np.array(d["threshold"], dtype=float),
            np.array(d["left"], dtype=int),
            np.array(d["right"], dtype=int),
            np.array(d["default_left"], dtype=bool),
            np.array(d["value"], dtype=float),
        )


class TreeBuilder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.default_left, self.value = [], []
        self.stats: dict[str, list] = {}

    def add_leaf(self, value: float, **stats) -> int:
        return self._add(LEAF, 0.0, True, value, stats)

    def add_split(self, feature: int, threshold: float, default_left: bool, **stats) -> int:
        return self._add(feature, threshold, default_left, 0.0, stats)

    def _add(self, feature, threshold, default_left, value, stats) -> int:
        i = len(self.feature)
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.default_left.append(default_left)
        self.value.append(value)
        for k, v in stats.items():
            self.stats.setdefault(k, [np.nan] * i).append(v)
        for k in self.stats:
            if len(self.stats[k]) < i + 1:
                self.stats[k].append(np.nan)
        return i

    def link(self, parent: int, left: int, right: int) -> None:
        self.left[parent] = left
        self.right[parent] = right

    def build(self) -> Tree:
        return Tree(
            np.array(self.feature, dtype=int),
            np.array(self.threshold, dtype=float),
            np.array(self.left, dtype=int),
            np.array(self.right, dtype=int),
            np.array(self.default_left, dtype=bool),
            np.array(self.value, dtype=float),
            {k: np.array(v, dtype=float) for k, v in self.stats.items()},
        )


def _gini_split(x, y, min_leaf):
    """Best threshold on one feature: (weighted child impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cut = np.flatnonzero(xs[:-1] != xs[1:])  # left side is xs[:cut+1]
    if cut.size == 0:
        return None
    n_left = cut + 1
    ok = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not ok.any():
        return None
    cut, n_left = cut[ok], n_left[ok]
    pos_left = np.cumsum(ys)[cut]
    pos_right = ys.sum() - pos_left
    n_right = n - n_left
    p_l, p_r = pos_left / n_left, pos_right / n_right
    imp = n_left * 2 * p_l * (1 - p_l) + n_right * 2 * p_r * (1 - p_r)
    k = int(np.argmin(imp))
    return float(imp[k]), float((xs[cut[k]] + xs[cut[k] + 1]) / 2.0)


def fit_cart(X, y, max_depth=None, min_samples_leaf=1, m_features=None, seed=0) -> Tree:
    """Greedy Gini CART; leaves store the positive-class fraction.

    With ``m_features`` set, each split considers a fresh random subset of
    that many features. Ties go to the lowest feature index, then the lowest
    threshold.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit a tree on zero rows")
    if min_samples_leaf < 1:
        raise ValueError("min_samples_leaf must be >= 1")
    m = p if m_features is None else int(m_features)
    if not 1 <= m <= p:
        raise ValueError(f"m_features must lie in [1, {p}]")
    rng = np.random.default_rng(seed)
    builder = TreeBuilder()

    def grow(rows, depth):
        yr = y[rows]
        frac = float(yr.mean())
        parent_imp = len(rows) * 2 * frac * (1 - frac)
        if parent_imp == 0.0 or (max_depth is not None and depth >= max_depth) or len(rows) < 2 * min_samples_leaf:
            return builder.add_leaf(frac)
        feats = np.arange(p) if m == p else np.sort(rng.choice(p, size=m, replace=False))
        best = None
        for j in feats:
            res = _gini_split(X[rows, j], yr, min_samples_leaf)
            if res is not None and (best is None or res[0] < best[0] - 1e-12):
                best = (res[0], int(j), res[1])
        if best is None or best[0] >= parent_imp - 1e-12:
            return builder.add_leaf(frac)
        _, j, thr = best
        node = builder.add_split(j, thr, True)
        go_left = X[rows, j] < thr
        left = grow(rows[go_left], depth + 1)
        right = grow(rows[~go_left], depth + 1)
        builder.link(node, left, right)
        return node

    grow(np.arange(n), 0)
    return builder.build()


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    m_features: int | None = None
    max_depth: int | None = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


def _fit_one(X, y, cfg: ForestConfig, t: int) -> Tree:
    seed = cfg.seed + t
    rows = np.arange(len(X))
    if cfg.bootstrap:
        rows = np.random.default_rng([seed, 1]).integers(0, len(X), size=len(X))
    return fit_cart(X[rows], y[rows], cfg.max_depth, cfg.min_samples_leaf, cfg.m_features, seed)


def fit_random_forest(X, y, cfg: ForestConfig = ForestConfig()) -> list[Tree]:
    """Tree ``t`` uses seed ``cfg.seed + t``, so results do not depend on scheduling."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as ex:
            return list(ex.map(lambda t: _fit_one(X, y, cfg, t), range(cfg.n_trees)))
    return [_fit_one(X, y, cfg, t) for t in range(cfg.n_trees)]


def forest_predict(trees: list[Tree], X) -> np.ndarray:
    return np.mean([t.predict(X) for t in trees], axis=0)


class RandomForest:
    def __init__(self, n_trees=100, m_features=None, max_depth=None, min_samples_leaf=1,
                 bootstrap=True, seed=0):
        self.params = dict(n_trees=int(n_trees), m_features=m_features, max_depth=max_depth,
                           min_samples_leaf=min_samples_leaf, bootstrap=bootstrap, seed=seed)

    def fit(self, X, y):
        p = np.asarray(X).shape[1]
        m = self.params["m_features"]
        if m is None:
            m = max(1, int(round(np.sqrt(p))))
        self.trees_ = fit_random_forest(X, y, ForestConfig(**{**self.params, "m_features": min(m, p)}))
        return self

    def predict_proba(self, X):
        return forest_predict(self.trees_, X)

    predict_score = predict_proba
