"""Second-order gradient boosting with regularized leaves and sparsity-aware splits.

Split finding scans all features of a node at once: values are sorted per
column with missing entries last, prefix sums of gradients/hessians give the
left-child statistics at every distinct-value boundary, and each boundary is
scored twice, once with the node's missing rows sent right and once left.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .linear import sigmoid
from .trees import Tree, TreeBuilder

_RANK_TOL = 1e-9


@dataclass(frozen=True)
class BoostParams:
    lam: float = 1.0
    gamma: float = 0.0
    eta: float = 0.1
    n_rounds: int = 200
    max_depth: int = 4
    min_child_weight: float = 1e-3
    approx_epsilon: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.lam < 0 or self.gamma < 0:
            raise ValueError("lam and gamma must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if not 0.0 < self.approx_epsilon < 1.0:
            raise ValueError("approx_epsilon must lie in (0, 1)")
        if self.n_rounds < 0 or self.max_depth < 0:
            raise ValueError("n_rounds and max_depth must be non-negative")


def logistic_grad_hess(prob, label):
    """Gradient and hessian of the log-loss with respect to the margin."""
    prob = np.asarray(prob, dtype=float)
    label = np.asarray(label, dtype=float)
    return prob - label, prob * (1.0 - prob)


def leaf_weight(G, H, lam) -> float:
    if not H + lam > 0:
        raise ValueError("leaf weight needs H + lambda > 0")
    return -G / (H + lam)


def split_gain(GL, HL, GR, HR, lam, gamma):
    return 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - (GL + GR) ** 2 / (HL + HR + lam)) - gamma


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float
    gain: float
    default_left: bool
    alt_gain: float

    @property
    def default_direction(self) -> str:
        return "left" if self.default_left else "right"


def _rank_hits(r_prev, r_cur, eps):
    """True where some interior rank k*eps falls in (r_prev, r_cur]."""
    k_min = np.floor(r_prev / eps + _RANK_TOL) + 1
    k_max = np.floor(r_cur / eps + _RANK_TOL)
    return (k_min <= k_max) & (k_min * eps < 1.0 - _RANK_TOL)


def weighted_quantile_candidates(values, weights, epsilon) -> np.ndarray:
    """Values ``q`` that are the first point reaching weighted rank ``k*epsilon``.

    The rank of ``z`` is the weight strictly below ``z`` over the total
    weight; candidates are interior (the minimum never qualifies) and
    deduplicated. A split ``x < q`` therefore puts roughly ``k*epsilon`` of
    the weight on the left.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if v.size == 0:
        return np.array([])
    total = w.sum()
    if not total > 0:
        raise ValueError("weights must not all be zero")
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    uniq, start = np.unique(v, return_index=True)
    if uniq.size < 2:
        return np.array([])
    below = np.r_[0.0, np.cumsum(w)][start] / total
    hits = _rank_hits(below[:-1], below[1:], epsilon)
    return uniq[1:][hits]


def _scan(xs, ms, gs, hs, params: BoostParams, approx: bool):
    """Best split over column-sorted node data (missing rows sorted last)."""
    m, p = xs.shape
    if m < 2:
        return None
    pres = ~ms
    Gc = np.cumsum(np.where(pres, gs, 0.0), axis=0)
    Hc = np.cumsum(np.where(pres, hs, 0.0), axis=0)
    Gp, Hp = Gc[-1], Hc[-1]
    Gm = np.where(ms, gs, 0.0).sum(axis=0) if ms.any() else 0.0
    Hm = np.where(ms, hs, 0.0).sum(axis=0) if ms.any() else 0.0

    # boundary i separates sorted positions i and i+1, both present and distinct
    valid = pres[1:] & (xs[:-1] != xs[1:])
    if approx:
        with np.errstate(invalid="ignore", divide="ignore"):
            r_cur = Hc[:-1] / Hp
        idx = np.where(valid, np.arange(m - 1)[:, None], -1)
        prev = np.maximum.accumulate(idx, axis=0)
        prev = np.vstack([np.full((1, p), -1), prev[:-1]])
        r_prev = np.where(prev >= 0, np.take_along_axis(r_cur, np.maximum(prev, 0), axis=0), 0.0)
        valid &= _rank_hits(r_prev, r_cur, params.approx_epsilon)
    if not valid.any():
        return None

    GL, HL = Gc[:-1], Hc[:-1]
    GR, HR = Gp - GL, Hp - HL
    lam, mcw = params.lam, params.min_child_weight

    def gains(gl, hl, gr, hr):
        ok = valid & (hl >= mcw) & (hr >= mcw)
        with np.errstate(invalid="ignore", divide="ignore"):
            g = split_gain(gl, hl, gr, hr, lam, params.gamma)
        return np.where(ok, g, -np.inf)

    g_right = gains(GL, HL, GR + Gm, HR + Hm)
    if ms.any():
        g_left = gains(GL + Gm, HL + Hm, GR, HR)
        left = g_left > g_right
        best = np.where(left, g_left, g_right)
    else:
        # nothing to route: both directions score the same, right wins the tie
        g_left, best = g_right, g_right
        left = np.zeros_like(valid)

    pos = np.argmax(best, axis=0)  # lowest threshold within each feature
    col_best = best[pos, np.arange(p)]
    j = int(np.argmax(col_best))  # lowest feature among ties
    gain = float(col_best[j])
    if not gain > 0:
        return None
    i = int(pos[j])
    return SplitCandidate(
        feature=j,
        threshold=float((xs[i, j] + xs[i + 1, j]) / 2.0),
        gain=gain,
        default_left=bool(left[i, j]),
        alt_gain=float(g_right[i, j] if left[i, j] else g_left[i, j]),
    )


def _sort_columns(X, missing):
    key = np.where(missing, np.inf, X)
    order = np.argsort(key, axis=0, kind="stable")
    return order, np.take_along_axis(key, order, axis=0), np.take_along_axis(missing, order, axis=0)


def _as_missing(X, missing):
    X = np.asarray(X, dtype=float)
    miss = np.isnan(X) if missing is None else (np.asarray(missing, dtype=bool) | np.isnan(X))
    return X, miss


def exact_greedy_split(X, g, h, params: BoostParams, rows=None, missing=None, approx: bool = False):
    """Best split of the node ``rows`` (all rows when None), or None."""
    X, miss = _as_missing(X, missing)
    rows = np.arange(len(X)) if rows is None else np.asarray(rows, dtype=int)
    if rows.size == 0:
        raise ValueError("empty node")
    g = np.asarray(g, dtype=float)[rows]
    h = np.asarray(h, dtype=float)[rows]
    order, xs, ms = _sort_columns(X[rows], miss[rows])
    return _scan(xs, ms, g[order], h[order], params, approx)


def approx_split(X, g, h, params: BoostParams, rows=None, missing=None):
    return exact_greedy_split(X, g, h, params, rows, missing, approx=True)


@dataclass
class BoostEnsemble:
    trees: list[Tree]
    base_score: float
    eta: float
    n_features: int
    history: list[float] = field(default_factory=list, repr=False)

    def margin(self, X, missing=None) -> np.ndarray:
        X, miss = _as_missing(X, missing)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        out = np.full(len(X), self.base_score)
        for t in self.trees:
            out += self.eta * t.predict(X, miss)
        return out

    def predict_proba(self, X, missing=None) -> np.ndarray:
        return sigmoid(self.margin(X, missing))

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "eta": self.eta,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "BoostEnsemble":
        return cls([Tree.from_dict(t) for t in d["trees"]], float(d["base_score"]),
                   float(d["eta"]), int(d["n_features"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BoostEnsemble":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def predict_boost(ensemble: BoostEnsemble, x, missing=None) -> float:
    x = np.asarray(x, dtype=float)[None, :]
    m = None if missing is None else np.asarray(missing, dtype=bool)[None, :]
    return float(ensemble.predict_proba(x, m)[0])


def fit_boost(X, y, params: BoostParams = BoostParams(), split_mode: str = "exact", missing=None) -> BoostEnsemble:
    """Additive training: one depth-wise regression tree per round on grad/hess."""
    if split_mode not in ("exact", "approx"):
        raise ValueError("split_mode must be 'exact' or 'approx'")
    approx = split_mode == "approx"
    X, miss = _as_missing(X, missing)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    ybar = float(np.clip(y.mean(), 1e-12, 1 - 1e-12))
    base = float(np.log(ybar / (1 - ybar)))
    margin = np.full(n, base)
    order, xs_all, ms_all = _sort_columns(X, miss)
    trees: list[Tree] = []
    history = [float(np.mean(np.logaddexp(0, margin) - y * margin))]

    for _ in range(params.n_rounds):
        g, h = logistic_grad_hess(sigmoid(margin), y)
        builder = TreeBuilder()

        def grow(rows, depth):
            G, H = float(g[rows].sum()), float(h[rows].sum())
            split = None
            if depth < params.max_depth and rows.size >= 2:
                in_node = np.zeros(n, dtype=bool)
                in_node[rows] = True
                sel = in_node[order].T  # (p, n)
                m = rows.size
                idx = order.T[sel].reshape(p, m).T
                xs = xs_all.T[sel].reshape(p, m).T
                ms = ms_all.T[sel].reshape(p, m).T
                split = _scan(xs, ms, g[idx], h[idx], params, approx)
            if split is None:
                return builder.add_leaf(leaf_weight(G, H, params.lam), G=G, H=H)
            node = builder.add_split(split.feature, split.threshold, split.default_left,
                                     G=G, H=H, gain=split.gain, alt_gain=split.alt_gain)
            xcol = X[rows, split.feature]
            mcol = miss[rows, split.feature]
            go_left = np.where(mcol, split.default_left, xcol < split.threshold)
            left = grow(rows[go_left], depth + 1)
            right = grow(rows[~go_left], depth + 1)
            builder.link(node, left, right)
            return node

        grow(np.arange(n), 0)
        tree = builder.build()
        trees.append(tree)
        margin = margin + params.eta * tree.predict(X, miss)
        history.append(float(np.mean(np.logaddexp(0, margin) - y * margin)))
    return BoostEnsemble(trees, base, params.eta, p, history)


class GradientBooster:
    def __init__(self, lam=1.0, gamma=0.0, eta=0.1, n_rounds=200, max_depth=4,
                 min_child_weight=1e-3, approx_epsilon=0.05, split_mode="exact", seed=0):
        self.params = BoostParams(lam, gamma, eta, int(n_rounds), int(max_depth),
                                  min_child_weight, approx_epsilon, seed)
        self.split_mode = split_mode

    def fit(self, X, y, missing=None):
        self.ensemble_ = fit_boost(X, y, self.params, self.split_mode, missing)
        return self

    def predict_proba(self, X, missing=None):
        return self.ensemble_.predict_proba(X, missing)

    predict_score = predict_proba
