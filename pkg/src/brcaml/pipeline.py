"""Config-driven run: load, preprocess, split, evaluate learners, write reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import __version__
from .learners import REGISTRY, LearnerContext, resolve_options, tunable
from .metrics import auc, roc_curve
from .preprocess import (
    ClassLabel,
    DesignMatrix,
    LabelRule,
    apply_drop_policy,
    assign_labels,
    build_clinical_matrix,
    build_genomic_matrix,
    fit_encoder,
)
from .semisup import co_train, enumerate_two_views, views_from_groups
from .synth import SynthSpec, generate_synthetic
from .tabular import DEFAULT_MISSING_TOKENS, TableFrame, intersect_patients, load_schema, load_table
from .validation import make_split, nested_cv, repeated_eval

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger(__name__)

THREADS_ENV = "BRCAML_THREADS"
TABLE_ROLES = ("clinical", "expression", "cna", "mutations")


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


class StageError(RuntimeError):
    """A pipeline stage failed; maps to exit status 1."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-tagged with the stage name
        raise StageError(name, exc) from exc


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


@dataclass(frozen=True)
class DataPaths:
    tables: Mapping[str, Path]
    schemas: Mapping[str, Path]
    missing_tokens: tuple[str, ...] = tuple(sorted(DEFAULT_MISSING_TOKENS))
    delimiter: str = "\t"


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    dataset: str
    learners: tuple[str, ...]
    output_dir: Path
    data: DataPaths | None = None
    synthetic: SynthSpec | None = None
    labels: LabelRule = LabelRule()
    learner_options: Mapping[str, Mapping[str, Any]] = field(default_factory=dict)
    stratify: bool = False
    k_outer: int = 5
    max_missing: int = 2
    threads: int | None = None

    def check_paths(self) -> None:
        if self.data is None:
            return
        for role, p in list(self.data.tables.items()) + list(self.data.schemas.items()):
            if not p.exists():
                raise ConfigError(f"{role}: path {str(p)!r} does not exist")


_TOP_KEYS = {"seed", "dataset", "learners", "output_dir", "data", "synthetic", "labels",
             "learner", "stratify", "k_outer", "max_missing", "threads"}


def parse_config(raw: Mapping, base_dir: Path = Path(".")) -> PipelineConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("seed", "dataset", "learners", "output_dir"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    if not isinstance(raw["seed"], int):
        raise ConfigError("seed must be an integer")
    dataset = raw["dataset"]
    if dataset not in ("clinical", "genomic"):
        raise ConfigError(f"dataset must be 'clinical' or 'genomic', got {dataset!r}")

    names = list(raw["learners"])
    if not names:
        raise ConfigError("learners list is empty")
    for name in names:
        if name not in REGISTRY:
            raise ConfigError(f"unknown learner {name!r} (known: {', '.join(REGISTRY)})")
    if len(set(names)) != len(names):
        raise ConfigError("learners list has duplicates")

    options = {}
    for name, over in raw.get("learner", {}).items():
        if name not in REGISTRY:
            raise ConfigError(f"options given for unknown learner {name!r}")
        try:
            resolve_options(REGISTRY[name], over)
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        options[name] = dict(over)

    has_data, has_synth = "data" in raw, "synthetic" in raw
    if has_data == has_synth:
        raise ConfigError("give exactly one of [data] or [synthetic]")
    data = synth = None
    if has_synth:
        try:
            synth = SynthSpec.from_mapping(raw["synthetic"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"synthetic: {exc}") from None
    else:
        d = dict(raw["data"])
        needed = ["clinical"] if dataset == "clinical" else list(TABLE_ROLES)
        tables, schemas = {}, {}
        for role in TABLE_ROLES:
            if role in d:
                tables[role] = base_dir / d.pop(role)
                key = f"{role}_schema"
                if key not in d:
                    raise ConfigError(f"data.{key} is required when data.{role} is given")
                schemas[role] = base_dir / d.pop(key)
        missing = [r for r in needed if r not in tables]
        if missing:
            raise ConfigError(f"dataset {dataset!r} needs data paths for {missing}")
        tokens = tuple(d.pop("missing_tokens", sorted(DEFAULT_MISSING_TOKENS)))
        delim = d.pop("delimiter", "\t")
        if d:
            raise ConfigError(f"unknown data keys: {sorted(d)}")
        data = DataPaths(tables, schemas, tokens, delim)

    lab = dict(raw.get("labels", {}))
    for k in ("dead_tokens", "disease_tokens"):
        if k in lab:
            lab[k] = tuple(lab[k])
    try:
        rule = LabelRule(**lab)
    except TypeError as exc:
        raise ConfigError(f"labels: {exc}") from None

    threads = raw.get("threads")
    if threads is not None and (not isinstance(threads, int) or threads < 1):
        raise ConfigError("threads must be a positive integer")
    k_outer = raw.get("k_outer", 5)
    if not isinstance(k_outer, int) or k_outer < 3:
        raise ConfigError("k_outer must be an integer >= 3")
    return PipelineConfig(
        seed=raw["seed"], dataset=dataset, learners=tuple(names),
        output_dir=Path(raw["output_dir"]), data=data, synthetic=synth, labels=rule,
        learner_options=options, stratify=bool(raw.get("stratify", False)),
        k_outer=k_outer, max_missing=int(raw.get("max_missing", 2)), threads=threads,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw, path.parent)


@dataclass
class Prepared:
    """Matrix and split shared by every learner in a run."""

    X: np.ndarray  # labeled rows only
    y: np.ndarray
    X_unlabeled: np.ndarray
    matrix: DesignMatrix
    split: Any
    n_dropped: int


def load_frames(cfg: PipelineConfig) -> dict[str, TableFrame]:
    if cfg.synthetic is not None:
        return generate_synthetic(cfg.synthetic).frames()
    d = cfg.data
    return {
        role: load_table(d.tables[role], load_schema(d.schemas[role]), d.missing_tokens, d.delimiter)
        for role in d.tables
    }


def prepare(cfg: PipelineConfig, frames: Mapping[str, TableFrame]) -> Prepared:
    roles = ["clinical"] if cfg.dataset == "clinical" else list(TABLE_ROLES)
    for r in roles:
        if r not in frames:
            raise ValueError(f"{r} table is required for the {cfg.dataset} dataset")
    # all supplied tables share one patient cohort so both datasets are comparable
    present = [r for r in TABLE_ROLES if r in frames]
    aligned = dict(zip(present, intersect_patients([frames[r] for r in present])))
    before = aligned["clinical"].n_rows
    clinical = apply_drop_policy(aligned["clinical"], cfg.max_missing)
    n_dropped = before - clinical.n_rows
    if clinical.n_rows == 0:
        raise ValueError("drop policy removed every row")
    if len(present) > 1:
        aligned = dict(zip(present, intersect_patients([clinical] + [aligned[r] for r in present[1:]])))
        clinical = aligned["clinical"]

    rule = cfg.labels
    labels = assign_labels(clinical.column(rule.time_column), clinical.column(rule.status_column),
                           clinical.column(rule.cause_column), rule)
    labeled = np.flatnonzero(labels != ClassLabel.UNLABELED)
    y = (labels[labeled] == ClassLabel.CLASS1).astype(int)
    split = make_split(len(labeled), cfg.seed, y if cfg.stratify else None)
    train_rows = labeled[split.train_idx]

    if cfg.dataset == "clinical":
        plan = fit_encoder(clinical, rows=train_rows, exclude=rule.response_columns)
        matrix = build_clinical_matrix(clinical, rule, plan)
    else:
        matrix = build_genomic_matrix(aligned["expression"], aligned["cna"], aligned["mutations"],
                                      labels, train_rows)
    return Prepared(matrix.values[labeled], y, matrix.values[matrix.unlabeled], matrix, split, n_dropped)


def _view_groups(prep: Prepared, dataset: str) -> tuple[list[str], list[tuple[int, ...]]]:
    if dataset == "clinical":
        return [n for n, _ in prep.matrix.groups], [cols for _, cols in prep.matrix.groups]
    # per-gene groups are far too many to enumerate; use the source blocks instead
    blocks: dict[str, list[int]] = {}
    for name, cols in prep.matrix.groups:
        key = "MUTATION" if name == "MUTATION" else name.split("_", 1)[0]
        blocks.setdefault(key, []).extend(cols)
    return list(blocks), [tuple(v) for v in blocks.values()]


def select_views(prep: Prepared, dataset: str, lam: float, options: Mapping, seed: int):
    """Score up to ``max_view_pairs`` two-view splits by validation AUC of a co-trained model."""
    from .learners import _irls_base

    names, groups = _view_groups(prep, dataset)
    splits = enumerate_two_views(groups)
    if not splits:
        raise ValueError("co-training needs at least two feature groups")
    limit = int(options["max_view_pairs"])
    if len(splits) > limit:
        pick = np.sort(np.random.default_rng([seed, 11]).choice(len(splits), size=limit, replace=False))
        splits = [splits[i] for i in pick]
    s = prep.split
    scored = []
    for sp in splits:
        views = views_from_groups(groups, sp, int(options["rounds"]))
        res = co_train(_irls_base(lam, options["coord_tol"]), prep.X[s.train_idx], prep.y[s.train_idx],
                       prep.X_unlabeled, views)
        scored.append((auc(res.predict_proba(prep.X[s.val_idx]), prep.y[s.val_idx]), sp, views))
    best = max(range(len(scored)), key=lambda i: (scored[i][0], -i))
    trials = [{"view_a": [names[i] for i in sp[0]], "view_b": [names[i] for i in sp[1]], "val_auc": a}
              for a, sp, _ in scored]
    return scored[best][2], trials


@dataclass
class LearnerOutcome:
    name: str
    label: str
    val_auc: float
    test_auc: float
    details: dict
    test_scores: np.ndarray
    curve_csv: str


def _curve_text(writer_rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in writer_rows:
        w.writerow(row)
    return buf.getvalue()


def run_learner(name: str, overrides: Mapping, prep: Prepared, dataset: str, seed: int,
                k_outer: int = 5) -> LearnerOutcome:
    defn = REGISTRY[name]
    grid, options = resolve_options(defn, dict(overrides))
    onehot = tuple(i for i, f in enumerate(prep.matrix.feature_names) if "=" in f)
    context = LearnerContext(X_unlabeled=prep.X_unlabeled, onehot_columns=onehot)
    extra: dict = {}
    if name == "co_training":
        lam = float(grid[len(grid) // 2])
        context.views, extra["view_trials"] = select_views(prep, dataset, lam, options, seed)
        best = max(extra["view_trials"], key=lambda t: t["val_auc"])
        extra["selected_views"] = [best["view_a"], best["view_b"]]

    if defn.mode == "repeated":
        repeats = int(options["repeats"])
        ev = repeated_eval(lambda s: defn.build(None, seed + s, options, context), prep.X, prep.y,
                           prep.split, repeats, seeds=[seed + r for r in range(repeats)], name=name)
        rows = [["repeat", "seed", "val_auc", "test_auc"]]
        rows += [[i, s, repr(float(v)), repr(float(t))]
                 for i, (s, v, t) in enumerate(zip(ev.seeds, ev.val_aucs, ev.test_aucs))]
        details = {"mode": "repeated", **ev.to_dict(), **extra}
        return LearnerOutcome(name, defn.label, ev.val_mean, ev.test_mean, details,
                              ev.test_scores, _curve_text(rows))

    rep = nested_cv(prep.X, prep.y, prep.split, tunable(defn, grid, options, context), seed, k_outer)
    bad = rep.audit.violations()
    if bad:
        raise RuntimeError(f"leakage audit failed for {name}: {bad}")
    rows = [["fold", "param", "mean_auc", "sd_auc"]]
    for f in rep.folds:
        for p, m, s in zip(f.curve.params, f.curve.mean_auc, f.curve.sd_auc):
            rows.append([f.fold, p, repr(float(m)), repr(float(s))])
    details = {"mode": "nested_cv", "param": defn.param, "grid": list(grid), **rep.to_dict(), **extra}
    return LearnerOutcome(name, defn.label, rep.mean_val_auc, rep.test_auc, details,
                          rep.test_scores, _curve_text(rows))


def _run_learner_task(args):
    name, overrides, prep, dataset, seed, k_outer = args
    with stage(f"learner:{name}"):
        return run_learner(name, overrides, prep, dataset, seed, k_outer)


@dataclass
class RunReport:
    environment: dict
    data: dict
    outcomes: list[LearnerOutcome]
    test_labels: np.ndarray
    roc_files: dict[str, str] = field(default_factory=dict)

    @property
    def rows(self) -> list[tuple[str, float, float]]:
        return [(o.label, o.val_auc, o.test_auc) for o in self.outcomes]

    def to_dict(self) -> dict:
        return {
            "environment": self.environment,
            "data": self.data,
            "models": [
                {"name": o.name, "label": o.label, "val_auc": o.val_auc, "test_auc": o.test_auc,
                 "details": o.details, "roc_csv": self.roc_files.get(o.name)}
                for o in self.outcomes
            ],
        }


def render_table(models: list[Mapping]) -> str:
    lines = ["| Model | Validation AUC | Test AUC |", "|---|---:|---:|"]
    for m in models:
        lines.append(f"| {m['label']} | {100 * m['val_auc']:.1f} | {100 * m['test_auc']:.1f} |")
    return "\n".join(lines) + "\n"


def write_report(report: RunReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for o in report.outcomes:
        fname = f"roc_{o.name}.csv"
        roc_curve(o.test_scores, report.test_labels).to_csv(out_dir / fname)
        report.roc_files[o.name] = fname
        (out_dir / f"curve_{o.name}.csv").write_text(o.curve_csv, encoding="utf-8")
    payload = report.to_dict()
    (out_dir / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    (out_dir / "table.md").write_text(render_table(payload["models"]), encoding="utf-8")


def run_pipeline(config: str | Path | PipelineConfig, output_dir: str | Path | None = None,
                 threads: int | None = None) -> RunReport:
    cfg = config if isinstance(config, PipelineConfig) else load_config(config)
    cfg.check_paths()
    n_threads = threads or cfg.threads or default_threads()
    out = Path(output_dir) if output_dir is not None else cfg.output_dir

    with stage("load"):
        frames = load_frames(cfg)
    with stage("preprocess"):
        prep = prepare(cfg, frames)
    log.info("%d labeled rows, %d unlabeled, %d features", len(prep.y), len(prep.X_unlabeled),
             prep.X.shape[1])

    tasks = [(n, cfg.learner_options.get(n, {}), prep, cfg.dataset, cfg.seed, cfg.k_outer)
             for n in cfg.learners]
    if n_threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(n_threads, len(tasks))) as ex:
            outcomes = list(ex.map(_run_learner_task, tasks))
    else:
        outcomes = [_run_learner_task(t) for t in tasks]

    s = prep.split
    data = {
        "dataset": cfg.dataset,
        "n_patients": int(prep.matrix.values.shape[0]),
        "n_dropped": int(prep.n_dropped),
        "n_labeled": int(len(prep.y)),
        "n_unlabeled": int(len(prep.X_unlabeled)),
        "n_features": int(prep.X.shape[1]),
        "positive_rate": float(prep.y.mean()),
        "split": {"train": len(s.train_idx), "val": len(s.val_idx), "test": len(s.test_idx)},
    }
    env = {"seed": cfg.seed, "version": __version__}
    report = RunReport(env, data, outcomes, prep.y[s.test_idx])
    with stage("report"):
        write_report(report, out)
    return report


def rerender(out_dir: str | Path) -> str:
    """Rebuild table.md from an existing report.json; returns the table text."""
    out_dir = Path(out_dir)
    with open(out_dir / "report.json", encoding="utf-8") as fh:
        payload = json.load(fh)
    text = render_table(payload["models"])
    (out_dir / "table.md").write_text(text, encoding="utf-8")
    return text
