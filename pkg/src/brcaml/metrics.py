"""ROC curves and AUC for binary scores."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr.tolist(), self.tpr.tolist()))

    def area(self) -> float:
        return float(np.sum(np.diff(self.fpr) * (self.tpr[1:] + self.tpr[:-1]) / 2.0))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for t, f, p in zip(self.thresholds, self.fpr, self.tpr):
                w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


def _check(scores, labels):
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise MetricError("scores and labels must have the same length")
    if not np.all(np.isfinite(s)):
        raise MetricError("scores must be finite")
    y = (y == 1)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == y.size:
        raise MetricError("ROC/AUC needs both classes present")
    return s, y


def roc_curve(scores, labels) -> RocCurve:
    """One point per distinct threshold, descending, starting at (0,0) and ending at (1,1)."""
    s, y = _check(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    # last index of each tie group
    ends = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    tp = np.cumsum(y)[ends]
    fp = (ends + 1) - tp
    n_pos, n_neg = y.sum(), y.size - y.sum()
    return RocCurve(
        fpr=np.r_[0.0, fp / n_neg],
        tpr=np.r_[0.0, tp / n_pos],
        thresholds=np.r_[np.inf, s[ends]],
    )


def auc(scores, labels) -> float:
    """Probability a random positive outscores a random negative (ties count half).

    Computed through midranks (Mann-Whitney U), O(n log n).
    """
    s, y = _check(scores, labels)
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(s.size)
    # midranks over tie groups
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_s) != 0) + 1]
    stops = np.r_[starts[1:], s.size]
    mid = (starts + stops + 1) / 2.0
    ranks[order] = np.repeat(mid, stops - starts)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))
