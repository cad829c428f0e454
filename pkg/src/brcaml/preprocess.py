"""Label derivation, deletion policy, encoding, standardization, diagnostics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .tabular import ColumnKind, TableFrame

NULL_CATEGORY = "<null>"


class PreprocessError(ValueError):
    pass


class ClassLabel(IntEnum):
    """Stored in integer label vectors; CLASS1 (death within horizon) is the positive class."""

    UNLABELED = -1
    CLASS2 = 0
    CLASS1 = 1


@dataclass(frozen=True)
class LabelRule:
    horizon_months: float = 120.0
    time_column: str = "OS_MONTHS"
    status_column: str = "OS_STATUS"
    cause_column: str = "VITAL_STATUS"
    dead_tokens: tuple[str, ...] = ("deceased", "dead", "1:deceased")
    disease_tokens: tuple[str, ...] = ("died of disease",)

    def __post_init__(self):
        if not self.horizon_months > 0:
            raise PreprocessError("horizon_months must be positive")

    @property
    def response_columns(self) -> tuple[str, str, str]:
        return (self.time_column, self.status_column, self.cause_column)


def _norm(tok) -> str:
    return "" if tok is None else str(tok).strip().lower()


def assign_labels(survival_months, status, cause, rule: LabelRule) -> np.ndarray:
    months = np.asarray(survival_months, dtype=float)
    if not (len(months) == len(status) == len(cause)):
        raise PreprocessError("label inputs must have equal length")
    if np.any(months < 0) or np.any(np.isnan(months)):
        raise PreprocessError("survival months must be non-negative numbers")
    dead_toks = {t.lower() for t in rule.dead_tokens}
    disease_toks = {t.lower() for t in rule.disease_tokens}
    dead = np.array([_norm(s) in dead_toks for s in status], dtype=bool)
    disease = np.array([_norm(c) in disease_toks for c in cause], dtype=bool)

    labels = np.full(len(months), int(ClassLabel.UNLABELED), dtype=int)
    labels[months > rule.horizon_months] = ClassLabel.CLASS2
    labels[dead & disease & (months <= rule.horizon_months)] = ClassLabel.CLASS1
    return labels


def apply_drop_policy(frame: TableFrame, max_missing: int = 2) -> TableFrame:
    """Drop rows with a missing numeric cell or more than ``max_missing`` missing cells."""
    numeric = [i for i, k in enumerate(frame.kinds) if k == ColumnKind.NUMERIC]
    mask = frame.missing_mask
    bad = mask[:, numeric].any(axis=1) | (mask.sum(axis=1) > max_missing)
    return frame.take(np.flatnonzero(~bad))


@dataclass(frozen=True)
class Standardizer:
    mean: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise PreprocessError("standardizer scale must be positive")

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.scale


def fit_standardizer(column, ddof: int = 0) -> Standardizer:
    x = np.asarray(column, dtype=float)
    if x.size == 0:
        raise PreprocessError("cannot fit a standardizer on an empty column")
    if x.size - ddof <= 0:
        raise PreprocessError("not enough values for the requested ddof")
    # constant columns centre on the value itself so they map to exact zeros
    if np.all(x == x[0]):
        return Standardizer(float(x[0]), 1.0)
    mean = float(x.mean())
    sd = float(np.sqrt(np.sum((x - mean) ** 2) / (x.size - ddof)))
    return Standardizer(mean, sd if sd > 0 else 1.0)


@dataclass(frozen=True)
class CategoricalPlan:
    name: str
    categories: tuple[str, ...]
    has_null: bool

    @property
    def width(self) -> int:
        return len(self.categories) + int(self.has_null)

    @property
    def feature_names(self) -> list[str]:
        names = [f"{self.name}={c}" for c in self.categories]
        if self.has_null:
            names.append(f"{self.name}={NULL_CATEGORY}")
        return names

    def encode(self, values, missing) -> np.ndarray:
        out = np.zeros((len(values), self.width))
        pos = {c: i for i, c in enumerate(self.categories)}
        for r, (v, m) in enumerate(zip(values, missing)):
            if m:
                if self.has_null:
                    out[r, -1] = 1.0
                continue
            j = pos.get(str(v))
            if j is not None:
                out[r, j] = 1.0
        return out


@dataclass(frozen=True)
class EncoderPlan:
    """Categorical one-hot plans followed by numeric standardizers, in output order."""

    categorical: tuple[CategoricalPlan, ...]
    numeric: tuple[tuple[str, Standardizer], ...]

    @property
    def width(self) -> int:
        return sum(p.width for p in self.categorical) + len(self.numeric)

    @property
    def feature_names(self) -> list[str]:
        names = [n for p in self.categorical for n in p.feature_names]
        return names + [n for n, _ in self.numeric]

    def spans(self) -> list[tuple[str, tuple[int, ...]]]:
        out, start = [], 0
        for p in self.categorical:
            out.append((p.name, tuple(range(start, start + p.width))))
            start += p.width
        for name, _ in self.numeric:
            out.append((name, (start,)))
            start += 1
        return out

    def transform(self, frame: TableFrame) -> np.ndarray:
        blocks = [p.encode(frame.column(p.name), frame.missing(p.name)) for p in self.categorical]
        for name, st in self.numeric:
            if frame.missing(name).any():
                raise PreprocessError(f"numeric column {name!r} has missing values; apply the drop policy first")
            blocks.append(st.transform(frame.column(name))[:, None])
        if not blocks:
            return np.zeros((frame.n_rows, 0))
        return np.hstack(blocks)

    def to_dict(self) -> dict:
        return {
            "categorical": [
                {"name": p.name, "categories": list(p.categories), "has_null": p.has_null}
                for p in self.categorical
            ],
            "numeric": [{"name": n, "mean": s.mean, "scale": s.scale} for n, s in self.numeric],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EncoderPlan":
        return cls(
            categorical=tuple(
                CategoricalPlan(c["name"], tuple(c["categories"]), bool(c["has_null"]))
                for c in d["categorical"]
            ),
            numeric=tuple((n["name"], Standardizer(n["mean"], n["scale"])) for n in d["numeric"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EncoderPlan":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _observed_categories(values, missing, numeric_order: bool) -> list[str]:
    seen: dict[str, None] = {}
    for v, m in zip(values, missing):
        if not m:
            seen.setdefault(str(v), None)
    cats = list(seen)
    if numeric_order:
        cats.sort(key=float)
    return cats


def fit_encoder(
    frame: TableFrame,
    rows: Sequence[int] | None = None,
    exclude: Iterable[str] = (),
    ddof: int = 0,
    numeric_category_order: bool = False,
) -> EncoderPlan:
    """Fit one-hot plans and standardizers on ``rows`` (all rows when None).

    Categories come from the schema's fixed list when present, otherwise in
    first-appearance order (or numeric order for integer-coded columns like
    CNA when ``numeric_category_order`` is set).
    """
    fit = frame if rows is None else frame.take(rows)
    skip = set(exclude)
    cat_plans, num_plans = [], []
    for name, kind in zip(fit.names, fit.kinds):
        if name in skip:
            continue
        miss = fit.missing(name)
        if kind == ColumnKind.CATEGORICAL:
            fixed = frame.categories.get(name)
            cats = list(fixed) if fixed is not None else _observed_categories(
                fit.column(name), miss, numeric_category_order
            )
            if not cats:
                raise PreprocessError(f"categorical column {name!r} has no observed categories")
            cat_plans.append(CategoricalPlan(name, tuple(cats), bool(miss.any())))
        elif kind == ColumnKind.NUMERIC:
            col = fit.column(name)[~miss]
            num_plans.append((name, fit_standardizer(col, ddof=ddof)))
    return EncoderPlan(tuple(cat_plans), tuple(num_plans))


@dataclass(eq=False)
class DesignMatrix:
    values: np.ndarray
    feature_names: list[str]
    labels: np.ndarray
    patient_ids: np.ndarray
    missing_mask: np.ndarray | None = None
    groups: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)

    def __post_init__(self):
        n, p = self.values.shape
        if len(self.labels) != n or len(self.patient_ids) != n:
            raise PreprocessError("values, labels and patient_ids must have equal row counts")
        if len(self.feature_names) != p:
            raise PreprocessError("feature_names length must equal the column count")
        if self.missing_mask is None:
            if np.isnan(self.values).any():
                raise PreprocessError("matrix has missing cells but no missing_mask")
        elif self.missing_mask.shape != self.values.shape:
            raise PreprocessError("missing_mask shape mismatch")

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(self.labels != ClassLabel.UNLABELED)

    @property
    def unlabeled(self) -> np.ndarray:
        return np.flatnonzero(self.labels == ClassLabel.UNLABELED)

    def binary_target(self, rows=None) -> np.ndarray:
        lab = self.labels if rows is None else self.labels[rows]
        if np.any(lab == ClassLabel.UNLABELED):
            raise PreprocessError("binary target requested for unlabeled rows")
        return (lab == ClassLabel.CLASS1).astype(int)


def build_clinical_matrix(frame: TableFrame, rule: LabelRule, plan: EncoderPlan) -> DesignMatrix:
    for col in rule.response_columns:
        if col not in frame.names:
            raise PreprocessError(f"response column {col!r} missing from the clinical table")
    encoded = {p.name for p in plan.categorical} | {n for n, _ in plan.numeric}
    leaked = encoded & set(rule.response_columns)
    if leaked:
        raise PreprocessError(f"encoder includes response columns {sorted(leaked)}")
    labels = assign_labels(
        frame.column(rule.time_column),
        frame.column(rule.status_column),
        frame.column(rule.cause_column),
        rule,
    )
    return DesignMatrix(
        values=plan.transform(frame),
        feature_names=plan.feature_names,
        labels=labels,
        patient_ids=np.array(frame.patient_ids),
        groups=plan.spans(),
    )


def build_genomic_matrix(
    expression: TableFrame,
    cna: TableFrame,
    mutations: TableFrame,
    labels: np.ndarray | None = None,
    train_rows: Sequence[int] | None = None,
    ddof: int = 0,
) -> DesignMatrix:
    """Expression (standardized) ++ CNA one-hot ++ mutation-class indicators.

    Expression and CNA columns with any missing cell are deleted. The mutation
    table is wide (one column per gene, cell = variant classification); an
    empty cell means no recorded mutation and is not treated as missing. Genes
    are collapsed, so each output column flags whether the patient carries at
    least one mutation of that variant class.
    """
    for other in (cna, mutations):
        if not np.array_equal(expression.patient_ids, other.patient_ids):
            raise PreprocessError("genomic tables must be intersected on patients first")
    n = expression.n_rows
    fit_rows = np.arange(n) if train_rows is None else np.asarray(train_rows, dtype=int)

    blocks, names, groups = [], [], []
    start = 0
    for name in expression.names:
        if expression.kind(name) != ColumnKind.NUMERIC or expression.missing(name).any():
            continue
        col = expression.column(name)
        st = fit_standardizer(col[fit_rows], ddof=ddof)
        blocks.append(st.transform(col)[:, None])
        names.append(name)
        groups.append((name, (start,)))
        start += 1

    for name in cna.names:
        miss = cna.missing(name)
        if miss.any():
            continue
        col = cna.column(name)
        if cna.kind(name) == ColumnKind.NUMERIC:
            col = np.array([str(int(v)) for v in col], dtype=object)
        fixed = cna.categories.get(name)
        cats = list(fixed) if fixed is not None else _observed_categories(col, miss, numeric_order=True)
        plan = CategoricalPlan(name, tuple(cats), False)
        blocks.append(plan.encode(col, miss))
        names.extend(plan.feature_names)
        groups.append((name, tuple(range(start, start + plan.width))))
        start += plan.width

    classes: dict[str, None] = {}
    for name in mutations.names:
        for v, m in zip(mutations.column(name), mutations.missing(name)):
            if not m:
                classes.setdefault(str(v), None)
    if classes:
        cls_list = list(classes)
        pos = {c: i for i, c in enumerate(cls_list)}
        mut = np.zeros((n, len(cls_list)))
        for name in mutations.names:
            for r, (v, m) in enumerate(zip(mutations.column(name), mutations.missing(name))):
                if not m:
                    mut[r, pos[str(v)]] = 1.0
        blocks.append(mut)
        names.extend(f"MUTATION={c}" for c in cls_list)
        groups.append(("MUTATION", tuple(range(start, start + len(cls_list)))))
        start += len(cls_list)

    if start == 0:
        raise PreprocessError("no genomic columns survived preprocessing")
    if labels is None:
        labels = np.full(n, int(ClassLabel.UNLABELED))
    return DesignMatrix(
        values=np.hstack(blocks),
        feature_names=names,
        labels=np.asarray(labels, dtype=int),
        patient_ids=np.array(expression.patient_ids),
        groups=groups,
    )


def nullity_correlation(frame: TableFrame, min_missing: int = 2) -> tuple[list[str], np.ndarray]:
    """Pearson correlation of missingness indicators between columns."""
    counts = frame.missing_mask.sum(axis=0)
    n = frame.n_rows
    keep = [j for j in range(len(frame.names)) if counts[j] >= min_missing and counts[j] < n]
    names = [frame.names[j] for j in keep]
    if not keep:
        return names, np.zeros((0, 0))
    ind = frame.missing_mask[:, keep].astype(float)
    corr = np.atleast_2d(np.corrcoef(ind, rowvar=False))
    return names, corr


def five_number_summary(x) -> tuple[float, float, float, float, float]:
    x = np.asarray(x, dtype=float)
    q = np.quantile(x, [0.0, 0.25, 0.5, 0.75, 1.0])
    return tuple(float(v) for v in q)


def nullity_group_stats(frame: TableFrame, null_column: str, target_column: str):
    """Five-number summaries of ``target_column`` split by nullity of ``null_column``.

    Returns ``(missing_summary, present_summary)``.
    """
    if frame.kind(target_column) != ColumnKind.NUMERIC:
        raise PreprocessError(f"target column {target_column!r} must be numeric")
    is_null = frame.missing(null_column)
    target = frame.column(target_column)
    usable = ~frame.missing(target_column)
    missing_vals = target[is_null & usable]
    present_vals = target[~is_null & usable]
    if missing_vals.size == 0:
        raise PreprocessError(f"group 'missing {null_column}' is empty")
    if present_vals.size == 0:
        raise PreprocessError(f"group 'present {null_column}' is empty")
    return five_number_summary(missing_vals), five_number_summary(present_vals)
