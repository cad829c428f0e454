"""Compute reference values with implementations independent of the package.

Nothing here imports brcaml. The output file is committed and the tests read
it, so a regression in the package cannot silently move its own reference.

    python scripts/derive_oracles.py  # rewrites tests/data/oracles.json
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"


def mean_log_loss(w, b, X, y):
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def newton_logistic(X, y, iters=100):
    """Unpenalized logistic MLE with an explicit intercept column."""
    A = np.hstack([np.ones((len(X), 1)), X])
    beta = np.zeros(A.shape[1])
    for _ in range(iters):
        p = 1.0 / (1.0 + np.exp(-A @ beta))
        grad = A.T @ (y - p)
        hess = A.T @ (A * (p * (1 - p))[:, None])
        step = np.linalg.solve(hess, grad)
        beta += step
        if np.max(np.abs(step)) < 1e-14:
            break
    return beta


def full_batch_gd(X, y, steps=1_000_000, lr=0.5):
    w = np.zeros(X.shape[1])
    b = 0.0
    n = len(y)
    for _ in range(steps):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        r = p - y
        w -= lr * (X.T @ r) / n
        b -= lr * r.sum() / n
    return w, b


def svm_grid(X, y, C, lo=-3.0, hi=3.0, step=0.02):
    """Brute force over (w1, w2, b), then two rounds of local refinement."""

    def search(c1, c2, cb, half, h):
        g = np.arange(-half, half + h / 2, h)
        W1, W2, B = np.meshgrid(c1 + g, c2 + g, cb + g, indexing="ij")
        W1, W2, B = W1.ravel(), W2.ravel(), B.ravel()
        best = (math.inf, None)
        for s in range(0, W1.size, 200_000):
            w1, w2, b = W1[s:s + 200_000], W2[s:s + 200_000], B[s:s + 200_000]
            m = 1.0 - y[:, None] * (X[:, :1] * w1 + X[:, 1:] * w2 + b)
            obj = 0.5 * (w1 ** 2 + w2 ** 2) + C * np.maximum(m, 0.0).sum(axis=0)
            k = int(np.argmin(obj))
            if obj[k] < best[0]:
                best = (float(obj[k]), (float(w1[k]), float(w2[k]), float(b[k])))
        return best

    mid = (lo + hi) / 2
    val, (a, c, b) = search(mid, mid, mid, (hi - lo) / 2, step)
    val, (a, c, b) = search(a, c, b, 5 * step, step / 10)
    val, (a, c, b) = search(a, c, b, step / 2, step / 100)
    return val, [a, c, b]


def social(r, f=0.5, l=1.5):
    return f * math.exp(-r / l) - math.exp(-r)


def bisect(fn, a, b, tol=1e-14):
    fa = fn(a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = fn(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def goa_line_update(pos, target, lb, ub, c, f=0.5, l=1.5):
    """Scalar-loop evaluation of one synchronous position update."""
    n, d = len(pos), len(pos[0])
    out = []
    for i in range(n):
        row = []
        for k in range(d):
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                dist = math.sqrt(sum((pos[j][q] - pos[i][q]) ** 2 for q in range(d)))
                dist = max(dist, 1e-12)
                diff = pos[j][k] - pos[i][k]
                acc += c * (ub[k] - lb[k]) / 2 * social(abs(diff), f, l) * diff / dist
            row.append(min(max(c * acc + target[k], lb[k]), ub[k]))
        out.append(row)
    return out


def main():
    ref: dict = {}

    ref["standardize_123"] = {"mean": 2.0, "scale": math.sqrt(2.0 / 3.0),
                              "z": [-1.0 / math.sqrt(2.0 / 3.0), 0.0, 1.0 / math.sqrt(2.0 / 3.0)]}

    # median of 1,3,5,7,9 and of 2,4,6,8,10
    ref["nullity_group_medians"] = {"present": 5.0, "missing": 6.0}

    # scores [0.2,0.7,0.5,0.4], labels [0,1,0,1]: thresholds 0.7,0.5,0.4,0.2 plus the origin
    ref["roc_example"] = {"points": [[0, 0], [0, 0.5], [0.5, 0.5], [0.5, 1.0], [1.0, 1.0]], "auc": 0.75}

    X6 = np.array([[1.0, 0.5], [-0.5, 1.0], [0.3, -1.2], [-1.0, -0.4], [0.8, 0.9], [-0.2, 0.2]])
    y6 = np.array([1.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    beta = newton_logistic(X6, y6)
    ref["irls_newton"] = {"X": X6.tolist(), "y": y6.tolist(), "intercept": float(beta[0]),
                          "weights": beta[1:].tolist(),
                          "lambda_max": float(np.max(np.abs(X6.T @ (y6 - y6.mean()))) / len(y6))}

    X5 = np.array([[0.5, 1.0], [-1.0, 0.3], [1.5, -0.5], [-0.3, -1.2], [0.8, 0.4]])
    y5 = np.array([1.0, 0.0, 0.0, 1.0, 1.0])
    w, b = full_batch_gd(X5, y5)
    ref["sgd_gd_oracle"] = {"X": X5.tolist(), "y": y5.tolist(), "weights": w.tolist(), "intercept": b,
                            "log_loss": mean_log_loss(w, b, X5, y5)}

    rng = np.random.default_rng(20)
    Xs = np.round(np.vstack([rng.normal([1.0, 1.0], 0.9, (10, 2)), rng.normal([-1.0, -0.5], 0.9, (10, 2))]), 3)
    ys = np.r_[np.ones(10), -np.ones(10)]
    val, arg = svm_grid(Xs, ys, C=1.0)
    ref["svm_grid"] = {"X": Xs.tolist(), "y": ys.tolist(), "C": 1.0, "objective": val, "argmin": arg}

    ref["leaf_weight_2_3_1"] = -2.0 / (3.0 + 1.0)
    ref["split_gain_example"] = 0.5 * (4 / 2 + 4 / 2 - 0 / 3)

    # 1..100 with unit weights: rank(z) = #{v < z}/100, first value reaching k/4 is v = 25k + 1
    ref["quantiles_1_100_eps_quarter"] = [26.0, 51.0, 76.0]

    ref["social_zero"] = bisect(lambda r: social(r), 1.0, 4.0)

    pos = [[-1.0, 0.0], [0.5, 0.0], [2.0, 0.0]]
    lb, ub = [-5.0, -5.0], [5.0, 5.0]
    ref["goa_line"] = {"positions": pos, "target": [0.3, -0.2], "lb": lb, "ub": ub, "c": 0.5,
                       "updated": goa_line_update(pos, [0.3, -0.2], lb, ub, 0.5)}

    ref["mlp_10_70_1_params"] = 10 * 70 + 70 + 70 * 1 + 1

    # Stirling numbers of the second kind S(g, 2) = 2^(g-1) - 1
    ref["two_view_counts"] = {str(g): 2 ** (g - 1) - 1 for g in range(2, 7)}

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(ref, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
