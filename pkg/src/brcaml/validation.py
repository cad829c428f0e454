"""Fixed 80/10/10 split, 5-fold nested cross-validation, one-SD parameter rule."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol, Sequence

import numpy as np

from .metrics import auc


class ValidationError(ValueError):
    pass


class FoldError(ValidationError):
    pass


class Estimator(Protocol):
    def fit(self, X: np.ndarray, y: np.ndarray) -> "Estimator": ...

    def predict_score(self, X: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class TunableLearner:
    """A learner family with a 1-D grid and the direction in which models get simpler.

    ``make(param, seed)`` returns an unfitted estimator. ``simpler`` is
    ``"larger"`` when larger parameter values give simpler models (e.g. a
    regularization strength) and ``"smaller"`` otherwise (e.g. SVM ``C``).
    """

    name: str
    make: Callable[[Any, int], Estimator]
    grid: tuple
    simpler: str = "larger"

    def __post_init__(self):
        if self.simpler not in ("larger", "smaller"):
            raise ValidationError("simpler must be 'larger' or 'smaller'")
        if len(self.grid) == 0:
            raise ValidationError(f"learner {self.name!r} has an empty grid")

    def simplicity_key(self, param) -> float:
        return -float(param) if self.simpler == "larger" else float(param)


@dataclass(frozen=True, eq=False)
class SplitPlan:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray
    seed: int


def split_sizes(n: int) -> tuple[int, int, int]:
    n_train = (8 * n) // 10
    n_val = n // 10
    return n_train, n_val, n - n_train - n_val


def make_split(n: int, seed: int, stratify: Sequence | None = None) -> SplitPlan:
    if n < 10:
        raise ValidationError(f"need at least 10 rows to split, got {n}")
    rng = np.random.default_rng(seed)
    n_train, n_val, n_test = split_sizes(n)
    if stratify is None:
        perm = rng.permutation(n)
        return SplitPlan(
            np.sort(perm[:n_train]), np.sort(perm[n_train:n_train + n_val]),
            np.sort(perm[n_train + n_val:]), seed,
        )

    strat = np.asarray(stratify)
    if len(strat) != n:
        raise ValidationError("stratify vector length must equal n")
    classes = np.unique(strat)
    counts = np.array([(strat == c).sum() for c in classes])

    def apportion(total):
        # cumulative rounding: each class within 1 of its proportional share, sum exact
        cum = np.round(np.cumsum(counts) * total / n).astype(int)
        return np.diff(np.r_[0, cum])

    tr_c, va_c = apportion(n_train), apportion(n_val)
    parts: list[list[int]] = [[], [], []]
    for c, k_tr, k_va in zip(classes, tr_c, va_c):
        idx = rng.permutation(np.flatnonzero(strat == c))
        parts[0].extend(idx[:k_tr])
        parts[1].extend(idx[k_tr:k_tr + k_va])
        parts[2].extend(idx[k_tr + k_va:])
    return SplitPlan(*(np.sort(np.array(p, dtype=int)) for p in parts), seed)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    indices: np.ndarray
    assignment: np.ndarray
    seed: int

    def fold(self, i: int) -> np.ndarray:
        return np.sort(self.indices[self.assignment == i])

    def rest(self, i: int) -> np.ndarray:
        return np.sort(self.indices[self.assignment != i])


def make_folds(indices, k: int, seed: int) -> FoldPlan:
    idx = np.asarray(indices, dtype=int)
    if len(idx) < k:
        raise ValidationError(f"cannot split {len(idx)} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(len(idx))
    assignment = np.empty(len(idx), dtype=int)
    assignment[perm] = np.arange(len(idx)) % k
    return FoldPlan(k, idx, assignment, seed)


@dataclass(frozen=True, eq=False)
class AccuracyCurve:
    params: tuple
    mean_auc: np.ndarray
    sd_auc: np.ndarray

    def __post_init__(self):
        if not (len(self.params) == len(self.mean_auc) == len(self.sd_auc)):
            raise ValidationError("curve vectors must have equal length")
        if np.any(np.asarray(self.sd_auc) < 0):
            raise ValidationError("sd_auc must be non-negative")


def one_sd_rule(curve: AccuracyCurve, simpler: str = "larger"):
    """Simplest parameter whose mean AUC is within one SD of the best mean."""
    if len(curve.params) == 0:
        raise ValidationError("empty accuracy curve")
    means = np.asarray(curve.mean_auc, dtype=float)
    best = int(np.argmax(means))
    cutoff = means[best] - curve.sd_auc[best]
    ok = [p for p, m in zip(curve.params, means) if m >= cutoff]
    return max(ok) if simpler == "larger" else min(ok)


@dataclass
class OuterFold:
    fold: int
    chosen_param: Any
    val_auc: float
    curve: AccuracyCurve


@dataclass
class CvAudit:
    """Index sets touched during a nested-CV run, kept for leakage checks."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    inner: list[dict] = field(default_factory=list)
    tuned_train: list[np.ndarray] = field(default_factory=list)
    outer_heldout: list[np.ndarray] = field(default_factory=list)
    final_train: np.ndarray | None = None

    def violations(self) -> list[str]:
        out = []
        s_tr, s_va, s_te = set(self.train.tolist()), set(self.val.tolist()), set(self.test.tolist())
        if s_tr & s_va or s_tr & s_te or s_va & s_te:
            out.append("train/val/test overlap")
        for rec in self.inner:
            fit = set(rec["fit"].tolist())
            held = set(self.outer_heldout[rec["outer"]].tolist())
            if fit & held:
                out.append(f"outer fold {rec['outer']}: inner training touches held-out fold")
            if fit & s_va or fit & s_te:
                out.append(f"outer fold {rec['outer']}: inner training touches validation/test")
            if fit & set(rec["score"].tolist()):
                out.append(f"outer fold {rec['outer']}: inner fit and score rows overlap")
        for i, tr in enumerate(self.tuned_train):
            st = set(tr.tolist())
            if st & s_va or st & s_te or st & set(self.outer_heldout[i].tolist()):
                out.append(f"outer fold {i}: tuned model saw held-out rows")
        if self.final_train is not None and set(self.final_train.tolist()) & s_te:
            out.append("final model saw test rows")
        return out


@dataclass
class CvReport:
    learner: str
    folds: list[OuterFold]
    mean_val_auc: float
    best_param: Any
    test_auc: float
    audit: CvAudit | None = None
    final_model: Any = None
    test_scores: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "learner": self.learner,
            "outer_folds": [
                {"fold": f.fold, "chosen_param": _jsonable(f.chosen_param), "val_auc": f.val_auc}
                for f in self.folds
            ],
            "mean_val_auc": self.mean_val_auc,
            "best_param": _jsonable(self.best_param),
            "test_auc": self.test_auc,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def curves_to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fold", "param", "mean_auc", "sd_auc"])
            for f in self.folds:
                for p, m, s in zip(f.curve.params, f.curve.mean_auc, f.curve.sd_auc):
                    w.writerow([f.fold, _jsonable(p), repr(float(m)), repr(float(s))])


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    return v


def _require_both_classes(y, rows, what: str):
    vals = set(np.asarray(y)[rows].tolist())
    if vals != {0, 1}:
        raise FoldError(f"{what} is missing a class (labels present: {sorted(vals)})")


def _fit_score(learner: TunableLearner, param, seed, X, y, fit_rows, score_rows):
    model = learner.make(param, seed)
    model.fit(X[fit_rows], y[fit_rows])
    scores = model.predict_score(X[score_rows])
    return auc(scores, y[score_rows]), model, scores


def nested_cv(
    X: np.ndarray,
    y: np.ndarray,
    split: SplitPlan,
    learner: TunableLearner,
    seed: int = 0,
    k_outer: int = 5,
    n_jobs: int = 1,
) -> CvReport:
    """Nested CV over ``split.train_idx``; tuned models are scored on ``split.val_idx``.

    Each outer iteration holds one fold out and runs an inner loop over the
    remaining folds (fit on all-but-one, score on the one) to build an
    accuracy curve over the grid. The one-SD rule picks the fold's parameter,
    a model refit on the remaining folds is scored on the validation split,
    and after the loop the best-validated parameter is refit on train+val and
    scored on test.
    """
    X = np.asarray(X)
    y = np.asarray(y, dtype=int)
    folds = make_folds(split.train_idx, k_outer, seed)
    for i in range(k_outer):
        _require_both_classes(y, folds.fold(i), f"outer fold {i}")
    _require_both_classes(y, split.val_idx, "validation split")
    _require_both_classes(y, split.test_idx, "test split")

    audit = CvAudit(split.train_idx, split.val_idx, split.test_idx)
    grid = tuple(learner.grid)
    results: list[OuterFold] = []

    def run(task):
        _, _, param, fit_rows, score_rows = task
        return _fit_score(learner, param, seed, X, y, fit_rows, score_rows)[0]

    for i in range(k_outer):
        held = folds.fold(i)
        audit.outer_heldout.append(held)
        inner_ids = [j for j in range(k_outer) if j != i]
        tasks = []
        for j in inner_ids:
            score_rows = folds.fold(j)
            fit_rows = np.sort(np.concatenate([folds.fold(m) for m in inner_ids if m != j]))
            audit.inner.append({"outer": i, "inner": j, "fit": fit_rows, "score": score_rows})
            for g, param in enumerate(grid):
                tasks.append((j, g, param, fit_rows, score_rows))
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as ex:
                aucs = list(ex.map(run, tasks))
        else:
            aucs = [run(t) for t in tasks]
        table = np.array(aucs).reshape(len(inner_ids), len(grid))
        curve = AccuracyCurve(grid, table.mean(axis=0), table.std(axis=0, ddof=1) if len(inner_ids) > 1 else np.zeros(len(grid)))
        chosen = one_sd_rule(curve, learner.simpler)

        tuned_rows = folds.rest(i)
        audit.tuned_train.append(tuned_rows)
        val_auc, _, _ = _fit_score(learner, chosen, seed, X, y, tuned_rows, split.val_idx)
        results.append(OuterFold(i, chosen, val_auc, curve))

    best_val = max(f.val_auc for f in results)
    candidates = [f.chosen_param for f in results if f.val_auc == best_val]
    best_param = min(candidates, key=learner.simplicity_key)

    final_rows = np.sort(np.concatenate([split.train_idx, split.val_idx]))
    audit.final_train = final_rows
    test_auc, model, test_scores = _fit_score(learner, best_param, seed, X, y, final_rows, split.test_idx)
    return CvReport(
        learner=learner.name,
        folds=results,
        mean_val_auc=float(np.mean([f.val_auc for f in results])),
        best_param=best_param,
        test_auc=test_auc,
        audit=audit,
        final_model=model,
        test_scores=test_scores,
    )


@dataclass
class RepeatedEval:
    learner: str
    seeds: tuple[int, ...]
    val_aucs: np.ndarray
    test_aucs: np.ndarray
    final_model: Any = None
    test_scores: np.ndarray | None = None

    @property
    def val_mean(self) -> float:
        return float(np.mean(self.val_aucs))

    @property
    def val_sd(self) -> float:
        return float(np.std(self.val_aucs))

    @property
    def test_mean(self) -> float:
        return float(np.mean(self.test_aucs))

    @property
    def test_sd(self) -> float:
        return float(np.std(self.test_aucs))

    def to_dict(self) -> dict:
        return {
            "learner": self.learner,
            "seeds": list(self.seeds),
            "val_aucs": [float(v) for v in self.val_aucs],
            "test_aucs": [float(v) for v in self.test_aucs],
            "val_mean": self.val_mean,
            "val_sd": self.val_sd,
            "test_mean": self.test_mean,
            "test_sd": self.test_sd,
        }


def repeated_eval(
    make: Callable[[int], Estimator],
    X: np.ndarray,
    y: np.ndarray,
    split: SplitPlan,
    repeats: int = 3,
    seeds: Sequence[int] | None = None,
    name: str = "learner",
) -> RepeatedEval:
    """Train on the training split with distinct seeds; score validation and test each time."""
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    seeds = tuple(range(repeats)) if seeds is None else tuple(seeds)
    if len(seeds) != repeats:
        raise ValidationError("need exactly one seed per repeat")
    y = np.asarray(y, dtype=int)
    val, test = [], []
    model, scores = None, None
    for s in seeds:
        model = make(s)
        model.fit(X[split.train_idx], y[split.train_idx])
        val.append(auc(model.predict_score(X[split.val_idx]), y[split.val_idx]))
        scores = model.predict_score(X[split.test_idx])
        test.append(auc(scores, y[split.test_idx]))
    return RepeatedEval(name, seeds, np.array(val), np.array(test), model, scores)
