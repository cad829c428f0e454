"""Typed tabular containers and delimiter-separated file loading.

A :class:`TableFrame` holds named, typed columns, an explicit missingness
mask, and a patient-ID index. Numeric columns are stored as float64 (NaN in
missing cells), categorical columns as object arrays of strings (``None`` in
missing cells).
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "NaN", "null"})


class TableError(ValueError):
    """Raised for malformed input tables."""


class IntegrityError(TableError):
    """Raised when patient identifiers are duplicated or inconsistent."""


class ColumnKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    IDENTIFIER = "identifier"


@dataclass(frozen=True)
class ColumnSpec:
    kind: ColumnKind
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.categories is not None and len(set(self.categories)) != len(self.categories):
            raise TableError(f"duplicate entries in category list {self.categories}")


@dataclass(frozen=True)
class SchemaSpec:
    """Declared column kinds for one table.

    ``default_kind`` lets wide genomic tables skip listing every gene; when it
    is ``None`` any header column missing from ``columns`` is an error.
    """

    id_column: str
    columns: Mapping[str, ColumnSpec] = field(default_factory=dict)
    default_kind: ColumnKind | None = None

    def spec_for(self, name: str) -> ColumnSpec:
        if name == self.id_column:
            return ColumnSpec(ColumnKind.IDENTIFIER)
        if name in self.columns:
            return self.columns[name]
        if self.default_kind is None:
            raise TableError(f"column {name!r} is not declared in the schema")
        return ColumnSpec(self.default_kind)

    @classmethod
    def from_dict(cls, d: Mapping) -> "SchemaSpec":
        cols = {}
        for name, spec in d.get("columns", {}).items():
            if isinstance(spec, str):
                spec = {"kind": spec}
            cats = spec.get("categories")
            cols[name] = ColumnSpec(
                ColumnKind(spec["kind"]),
                tuple(str(c) for c in cats) if cats is not None else None,
            )
        default = d.get("default_kind")
        return cls(
            id_column=d["id_column"],
            columns=cols,
            default_kind=ColumnKind(default) if default else None,
        )

    def to_dict(self) -> dict:
        out: dict = {"id_column": self.id_column, "columns": {}}
        for name, spec in self.columns.items():
            entry: dict = {"kind": spec.kind.value}
            if spec.categories is not None:
                entry["categories"] = list(spec.categories)
            out["columns"][name] = entry
        if self.default_kind is not None:
            out["default_kind"] = self.default_kind.value
        return out


def load_schema(path: str | Path) -> SchemaSpec:
    with open(path, encoding="utf-8") as fh:
        return SchemaSpec.from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class TableFrame:
    names: tuple[str, ...]
    kinds: tuple[ColumnKind, ...]
    values: tuple[np.ndarray, ...]
    missing_mask: np.ndarray
    patient_ids: np.ndarray
    id_column: str = "PATIENT_ID"
    categories: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.patient_ids)
        if not (len(self.names) == len(self.kinds) == len(self.values)):
            raise TableError("names, kinds and values must have equal length")
        for name, v in zip(self.names, self.values):
            if len(v) != n:
                raise TableError(f"column {name!r} has {len(v)} rows, expected {n}")
        if self.missing_mask.shape != (n, len(self.names)):
            raise TableError("missing_mask shape does not match the table")
        if len(set(self.patient_ids.tolist())) != n:
            raise IntegrityError("patient ids are not unique")
        for arr in (self.missing_mask, self.patient_ids, *self.values):
            arr.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return len(self.patient_ids)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.values[self.index(name)]

    def kind(self, name: str) -> ColumnKind:
        return self.kinds[self.index(name)]

    def missing(self, name: str) -> np.ndarray:
        return self.missing_mask[:, self.index(name)]

    def columns_of_kind(self, kind: ColumnKind) -> list[str]:
        return [n for n, k in zip(self.names, self.kinds) if k == kind]

    def take(self, rows: Sequence[int] | np.ndarray) -> "TableFrame":
        rows = np.asarray(rows, dtype=int)
        return TableFrame(
            names=self.names,
            kinds=self.kinds,
            values=tuple(v[rows] for v in self.values),
            missing_mask=self.missing_mask[rows],
            patient_ids=self.patient_ids[rows],
            id_column=self.id_column,
            categories=self.categories,
        )

    def select(self, names: Iterable[str]) -> "TableFrame":
        idx = [self.index(n) for n in names]
        return TableFrame(
            names=tuple(self.names[i] for i in idx),
            kinds=tuple(self.kinds[i] for i in idx),
            values=tuple(self.values[i] for i in idx),
            missing_mask=self.missing_mask[:, idx],
            patient_ids=self.patient_ids,
            id_column=self.id_column,
            categories={k: v for k, v in self.categories.items() if k in set(self.names[i] for i in idx)},
        )

    def drop(self, names: Iterable[str]) -> "TableFrame":
        gone = set(names)
        return self.select([n for n in self.names if n not in gone])

    def equals(self, other: "TableFrame") -> bool:
        if (self.names, self.kinds, self.id_column) != (other.names, other.kinds, other.id_column):
            return False
        if not np.array_equal(self.patient_ids, other.patient_ids):
            return False
        if not np.array_equal(self.missing_mask, other.missing_mask):
            return False
        for kind, a, b in zip(self.kinds, self.values, other.values):
            if kind == ColumnKind.NUMERIC:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif a.tolist() != b.tolist():
                return False
        return True


def frame_from_columns(
    data: Mapping[str, Sequence],
    kinds: Mapping[str, ColumnKind],
    patient_ids: Sequence[str],
    id_column: str = "PATIENT_ID",
) -> TableFrame:
    """Build a frame from python sequences; ``None`` (or NaN for numerics) marks missing."""
    names, kind_list, values, masks = [], [], [], []
    for name, col in data.items():
        kind = kinds[name]
        if kind == ColumnKind.NUMERIC:
            arr = np.array([np.nan if v is None else float(v) for v in col], dtype=float)
            mask = np.isnan(arr)
        else:
            arr = np.array([None if v is None else str(v) for v in col], dtype=object)
            mask = np.array([v is None for v in arr], dtype=bool)
        names.append(name)
        kind_list.append(kind)
        values.append(arr)
        masks.append(mask)
    n = len(patient_ids)
    mask = np.column_stack(masks) if masks else np.zeros((n, 0), dtype=bool)
    return TableFrame(
        names=tuple(names),
        kinds=tuple(kind_list),
        values=tuple(values),
        missing_mask=mask.reshape(n, len(names)),
        patient_ids=np.array([str(p) for p in patient_ids], dtype=object),
        id_column=id_column,
    )


def load_table(
    path: str | Path,
    schema: SchemaSpec,
    missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS,
    delimiter: str = "\t",
) -> TableFrame:
    missing_tokens = frozenset(missing_tokens)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise TableError(f"{path}: empty file") from None
        rows = [r for r in reader if r]

    if schema.id_column not in header:
        raise TableError(f"{path}: id column {schema.id_column!r} not in header")
    specs = [schema.spec_for(h) for h in header]
    for row_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise TableError(f"{path}: line {row_no} has {len(row)} fields, expected {len(header)}")

    id_pos = header.index(schema.id_column)
    ids = []
    for row_no, row in enumerate(rows, start=2):
        pid = row[id_pos]
        if pid in missing_tokens:
            raise IntegrityError(f"{path}: line {row_no} has a missing patient id")
        ids.append(pid)
    seen: set[str] = set()
    for pid in ids:
        if pid in seen:
            raise IntegrityError(f"{path}: duplicate patient id {pid!r}")
        seen.add(pid)

    names, kinds, values, masks = [], [], [], []
    categories = {}
    for j, (name, spec) in enumerate(zip(header, specs)):
        if j == id_pos:
            continue
        raw = [r[j] for r in rows]
        mask = np.array([c in missing_tokens for c in raw], dtype=bool)
        if spec.kind == ColumnKind.NUMERIC:
            arr = np.full(len(raw), np.nan)
            for i, cell in enumerate(raw):
                if mask[i]:
                    continue
                try:
                    arr[i] = float(cell)
                except ValueError:
                    raise TableError(
                        f"{path}: cannot parse {cell!r} as a number (line {i + 2}, column {name!r})"
                    ) from None
        else:
            arr = np.array([None if m else c for c, m in zip(raw, mask)], dtype=object)
            if spec.categories is not None:
                categories[name] = spec.categories
        names.append(name)
        kinds.append(spec.kind)
        values.append(arr)
        masks.append(mask)

    n = len(rows)
    return TableFrame(
        names=tuple(names),
        kinds=tuple(kinds),
        values=tuple(values),
        missing_mask=(np.column_stack(masks) if masks else np.zeros((n, 0), bool)).reshape(n, len(names)),
        patient_ids=np.array(ids, dtype=object),
        id_column=schema.id_column,
        categories=categories,
    )


def write_table(frame: TableFrame, path: str | Path, delimiter: str = "\t", missing_token: str = "NA") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow([frame.id_column, *frame.names])
        for i in range(frame.n_rows):
            row = [frame.patient_ids[i]]
            for j, (kind, col) in enumerate(zip(frame.kinds, frame.values)):
                if frame.missing_mask[i, j]:
                    row.append(missing_token)
                elif kind == ColumnKind.NUMERIC:
                    row.append(repr(float(col[i])))
                else:
                    row.append(col[i])
            writer.writerow(row)


def schema_of(frame: TableFrame) -> SchemaSpec:
    return SchemaSpec(
        id_column=frame.id_column,
        columns={
            n: ColumnSpec(k, frame.categories.get(n))
            for n, k in zip(frame.names, frame.kinds)
        },
    )


def intersect_patients(frames: Sequence[TableFrame]) -> list[TableFrame]:
    """Restrict every frame to the patients present in all of them, sorted by ID."""
    if not frames:
        return []
    common = set(frames[0].patient_ids.tolist())
    for f in frames[1:]:
        common &= set(f.patient_ids.tolist())
    if not common:
        raise TableError("patient intersection is empty")
    order = sorted(common)
    out = []
    for f in frames:
        pos = {pid: i for i, pid in enumerate(f.patient_ids.tolist())}
        out.append(f.take([pos[p] for p in order]))
    return out
