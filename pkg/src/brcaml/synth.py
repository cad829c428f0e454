"""Seeded generator for clinical-like and genomic-like tables with a planted signal."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from .tabular import ColumnKind, ColumnSpec, SchemaSpec, TableFrame, frame_from_columns, write_table

# (name, levels); mirrors the kind of discrete clinical attributes in METABRIC exports
CLINICAL_CATEGORICAL = [
    ("ER_STATUS", ["Positive", "Negative"]),
    ("HER2_STATUS", ["Negative", "Positive"]),
    ("CLAUDIN_SUBTYPE", ["LumA", "LumB", "Her2", "Basal", "claudin-low", "Normal"]),
    ("CHEMOTHERAPY", ["NO", "YES"]),
    ("HISTOLOGICAL_SUBTYPE", ["Ductal/NST", "Lobular", "Mixed", "Medullary"]),
    ("LATERALITY", ["Left", "Right"]),
    ("CELLULARITY", ["High", "Moderate", "Low"]),
    ("INFERRED_MENOPAUSAL_STATE", ["Post", "Pre"]),
    ("HORMONE_THERAPY", ["YES", "NO"]),
    ("RADIO_THERAPY", ["YES", "NO"]),
    ("BREAST_SURGERY", ["MASTECTOMY", "BREAST CONSERVING"]),
    ("THREEGENE", ["ER+/HER2- Low Prolif", "ER+/HER2- High Prolif", "ER-/HER2-", "HER2+"]),
    ("ER_IHC", ["Positve", "Negative"]),
    ("INTCLUST", [str(i) for i in range(1, 11)]),
]
CLINICAL_NUMERIC = ["AGE_AT_DIAGNOSIS", "NPI", "LYMPH_NODES_EXAMINED_POSITIVE"]
VARIANT_CLASSES = ["Missense_Mutation", "Nonsense_Mutation", "Frame_Shift_Del", "Frame_Shift_Ins",
                   "Splice_Site", "In_Frame_Del", "Silent", "Nonstop_Mutation"]
RESPONSE = ("OS_MONTHS", "OS_STATUS", "VITAL_STATUS")


@dataclass(frozen=True)
class SynthSpec:
    rows: int = 400
    n_categorical: int = 8
    n_expression: int = 200
    n_cna: int = 40
    n_mutation_genes: int = 20
    informative: int = 4
    signal: float = 2.0
    label_noise: float = 0.1
    genomic_weight: float = 0.5
    time_shape: float = 1.0
    categorical_missing_rate: float = 0.03
    numeric_missing_rate: float = 0.02
    expression_missing_columns: int = 2
    mutation_rate: float = 0.08
    seed: int = 0

    def __post_init__(self):
        if self.rows < 20:
            raise ValueError("synthetic data needs at least 20 rows")
        if not 1 <= self.n_categorical <= len(CLINICAL_CATEGORICAL):
            raise ValueError(f"n_categorical must lie in [1, {len(CLINICAL_CATEGORICAL)}]")
        if self.informative < 0:
            raise ValueError("informative must be >= 0")
        if not 0.0 <= self.genomic_weight <= 1.0:
            raise ValueError("genomic_weight must lie in [0, 1]")
        if not self.time_shape > 0:
            raise ValueError("time_shape must be positive")

    @classmethod
    def from_mapping(cls, d: Mapping) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown synthetic keys: {sorted(unknown)}")
        return cls(**dict(d))


@dataclass
class SyntheticData:
    clinical: TableFrame
    expression: TableFrame
    cna: TableFrame
    mutations: TableFrame
    informative_genes: list[str]
    informative_clinical: list[str]

    def frames(self) -> dict[str, TableFrame]:
        return {"clinical": self.clinical, "expression": self.expression,
                "cna": self.cna, "mutations": self.mutations}


def _standardize(v):
    sd = v.std()
    return (v - v.mean()) / sd if sd > 0 else v * 0.0


def generate_synthetic(spec: SynthSpec = SynthSpec()) -> SyntheticData:
    rng = np.random.default_rng(spec.seed)
    n = spec.rows
    ids = [f"MB-{i:04d}" for i in range(n)]

    age = np.round(rng.normal(60, 12, n).clip(25, 95), 2)
    npi = np.round(2.0 + rng.gamma(2.0, 1.0, n).clip(0, 5), 3)
    nodes = rng.geometric(0.45, n) - 1.0
    numeric = {"AGE_AT_DIAGNOSIS": age, "NPI": npi, "LYMPH_NODES_EXAMINED_POSITIVE": nodes}

    cats = {}
    for name, levels in CLINICAL_CATEGORICAL[:spec.n_categorical]:
        probs = rng.dirichlet(np.full(len(levels), 4.0))
        cats[name] = rng.choice(len(levels), size=n, p=probs)

    expr = rng.normal(0.0, 1.0, size=(n, spec.n_expression))
    k_genes = min(spec.informative, spec.n_expression)
    informative_genes = [f"GENE_{j:04d}" for j in range(k_genes)]

    # risk mixes a clinical and a genomic score; genomic_weight is the genomic share of variance
    clinical_terms = [_standardize(npi), _standardize(nodes)]
    for name, _ in CLINICAL_CATEGORICAL[:spec.n_categorical]:
        clinical_terms.append(_standardize((cats[name] == 0).astype(float)))
    k_clin = min(spec.informative, len(clinical_terms))
    clin_names = (["NPI", "LYMPH_NODES_EXAMINED_POSITIVE"]
                  + [nm for nm, _ in CLINICAL_CATEGORICAL[:spec.n_categorical]])[:k_clin]
    risk = np.zeros(n)
    if spec.informative > 0:
        clin = sum(clinical_terms[:k_clin]) / np.sqrt(k_clin)
        gen = expr[:, :k_genes].sum(axis=1) / np.sqrt(max(k_genes, 1))
        w = spec.genomic_weight
        risk = spec.signal * (np.sqrt(1.0 - w) * clin + np.sqrt(w) * gen)

    noisy = rng.random(n) < spec.label_noise
    risk_used = np.where(noisy, 0.0, risk)
    # Weibull proportional hazards; shape 1 is exponential, larger shapes tie times closer to risk
    k = spec.time_shape
    event = 200.0 * np.exp(-risk_used / k) * rng.weibull(k, n)
    censor = rng.uniform(20.0, 320.0, n)
    months = np.round(np.minimum(event, censor), 2)
    dead = event <= censor
    disease = dead & (rng.random(n) < 0.85)
    status = np.where(dead, "Deceased", "Living")
    vital = np.where(~dead, "Living", np.where(disease, "Died of Disease", "Died of Other Causes"))

    data, kinds = {}, {}
    cat_missing = rng.random((n, spec.n_categorical)) < spec.categorical_missing_rate
    for j, (name, levels) in enumerate(CLINICAL_CATEGORICAL[:spec.n_categorical]):
        data[name] = [None if cat_missing[i, j] else levels[cats[name][i]] for i in range(n)]
        kinds[name] = ColumnKind.CATEGORICAL
    for name in CLINICAL_NUMERIC:
        miss = rng.random(n) < spec.numeric_missing_rate
        data[name] = [None if miss[i] else float(v) for i, v in enumerate(numeric[name])]
        kinds[name] = ColumnKind.NUMERIC
    data["OS_MONTHS"] = months.tolist()
    data["OS_STATUS"] = status.tolist()
    data["VITAL_STATUS"] = vital.tolist()
    kinds.update({"OS_MONTHS": ColumnKind.NUMERIC, "OS_STATUS": ColumnKind.CATEGORICAL,
                  "VITAL_STATUS": ColumnKind.CATEGORICAL})
    clinical = frame_from_columns(data, kinds, ids)

    expr = np.round(expr, 6)
    e_data = {f"GENE_{j:04d}": expr[:, j].tolist() for j in range(spec.n_expression)}
    # a few columns with one missing cell each, which genomic preprocessing must delete
    spare = np.arange(k_genes, spec.n_expression)
    n_holes = min(spec.expression_missing_columns, spare.size)
    holes = rng.choice(spare, size=n_holes, replace=False) if n_holes else []
    for j in holes:
        e_data[f"GENE_{j:04d}"][int(rng.integers(n))] = None
    expression = frame_from_columns(e_data, {k: ColumnKind.NUMERIC for k in e_data}, ids)

    cna_vals = rng.choice([-2, -1, 0, 1, 2], size=(n, spec.n_cna), p=[0.04, 0.16, 0.6, 0.16, 0.04])
    c_data = {f"CNA_{j:04d}": [str(v) for v in cna_vals[:, j]] for j in range(spec.n_cna)}
    cna = frame_from_columns(c_data, {k: ColumnKind.CATEGORICAL for k in c_data}, ids)

    m_data = {}
    for j in range(spec.n_mutation_genes):
        hit = rng.random(n) < spec.mutation_rate
        cls = rng.choice(len(VARIANT_CLASSES), size=n)
        m_data[f"MUT_{j:03d}"] = [VARIANT_CLASSES[cls[i]] if hit[i] else None for i in range(n)]
    mutations = frame_from_columns(m_data, {k: ColumnKind.CATEGORICAL for k in m_data}, ids)

    return SyntheticData(clinical, expression, cna, mutations, informative_genes, clin_names)


def clinical_schema(frame: TableFrame) -> SchemaSpec:
    return SchemaSpec(
        id_column=frame.id_column,
        columns={n: ColumnSpec(k) for n, k in zip(frame.names, frame.kinds)},
    )


def write_synthetic(data: SyntheticData, out_dir: str | Path, spec: SynthSpec | None = None) -> dict[str, Path]:
    """Write TSV tables and JSON schemas; returns the written paths keyed by role."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    schemas = {
        "clinical": clinical_schema(data.clinical),
        "expression": SchemaSpec(data.expression.id_column, {}, ColumnKind.NUMERIC),
        "cna": SchemaSpec(data.cna.id_column, {}, ColumnKind.CATEGORICAL),
        "mutations": SchemaSpec(data.mutations.id_column, {}, ColumnKind.CATEGORICAL),
    }
    for role, frame in data.frames().items():
        p = out / f"{role}.tsv"
        write_table(frame, p)
        s = out / f"{role}_schema.json"
        s.write_text(json.dumps(schemas[role].to_dict(), indent=2), encoding="utf-8")
        paths[role] = p
        paths[f"{role}_schema"] = s
    if spec is not None:
        (out / "synth_spec.json").write_text(json.dumps(asdict(spec), indent=2), encoding="utf-8")
    return paths
