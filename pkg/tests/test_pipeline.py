import json

import numpy as np
import pytest

from brcaml.cli import main
from brcaml.pipeline import (
    ConfigError,
    StageError,
    load_config,
    parse_config,
    run_pipeline,
    stage,
)
from brcaml.synth import SynthSpec, generate_synthetic
from brcaml.tabular import load_schema, load_table

ALL = ["knn", "logreg", "svm", "mlp", "forest", "irls_l1", "self_training", "co_training", "goa_mlp", "boost"]


def _toml(path, learners, out, dataset="clinical", seed=7, synth="rows = 120\nseed = 7", extra=""):
    names = ", ".join(f'"{n}"' for n in learners)
    path.write_text(f'seed = {seed}\ndataset = "{dataset}"\noutput_dir = "{out}"\n'
                    f"learners = [{names}]\n{extra}\n[synthetic]\n{synth}\n")
    return path


def test_knn_only_single_row(tmp_path, capsys):
    cfg = _toml(tmp_path / "c.toml", ["knn"], tmp_path / "out")
    assert main(["run", str(cfg)]) == 0
    rep = json.loads((tmp_path / "out" / "report.json").read_text())
    assert [m["name"] for m in rep["models"]] == ["knn"]
    assert rep["environment"]["seed"] == 7
    for f in ("roc_knn.csv", "curve_knn.csv", "table.md"):
        assert (tmp_path / "out" / f).exists()
    assert "K-Nearest Neighbors" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path):
    cfg = _toml(tmp_path / "c.toml", ["knn", "irls_l1"], tmp_path / "a")
    assert main(["run", str(cfg)]) == 0
    assert main(["run", str(cfg), "--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for f in ("report.json", "table.md", "roc_irls_l1.csv", "curve_knn.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_unknown_learner_exit_2(tmp_path, capsys):
    cfg = _toml(tmp_path / "c.toml", ["knn", "deep_forest"], tmp_path / "out")
    assert main(["run", str(cfg)]) == 2
    assert "deep_forest" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("raw,needle", [
    ({"dataset": "clinical", "learners": ["knn"], "output_dir": "o", "synthetic": {}}, "seed"),
    ({"seed": 0, "dataset": "proteomic", "learners": ["knn"], "output_dir": "o", "synthetic": {}}, "dataset"),
    ({"seed": 0, "dataset": "clinical", "learners": [], "output_dir": "o", "synthetic": {}}, "empty"),
    ({"seed": 0, "dataset": "clinical", "learners": ["knn"], "output_dir": "o"}, "exactly one"),
    ({"seed": 0, "dataset": "clinical", "learners": ["knn"], "output_dir": "o", "synthetic": {"rows": 5}}, "20"),
    ({"seed": 0, "dataset": "clinical", "learners": ["knn"], "output_dir": "o", "synthetic": {},
      "learner": {"knn": {"depth": 3}}}, "depth"),
    ({"seed": 0, "dataset": "clinical", "learners": ["knn"], "output_dir": "o", "synthetic": {}, "k_outer": 2},
     "k_outer"),
    ({"seed": 0, "dataset": "genomic", "learners": ["knn"], "output_dir": "o",
      "data": {"clinical": "c.tsv", "clinical_schema": "c.json"}}, "needs data paths"),
])
def test_config_errors(raw, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config(raw)


def test_missing_data_path_is_config_error(tmp_path, capsys):
    (tmp_path / "c.toml").write_text('seed = 0\ndataset = "clinical"\noutput_dir = "o"\nlearners = ["knn"]\n'
                                     '[data]\nclinical = "nope.tsv"\nclinical_schema = "nope.json"\n')
    assert main(["run", str(tmp_path / "c.toml")]) == 2
    assert "does not exist" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.toml")]) == 2


def test_stage_tagging():
    with pytest.raises(StageError, match=r"\[load\] KeyError"):
        with stage("load"):
            raise KeyError("x")


def test_synth_then_run_from_files(tmp_path, capsys):
    spec = tmp_path / "s.toml"
    spec.write_text("rows = 150\nn_expression = 10\nn_cna = 5\nn_mutation_genes = 4\nseed = 3\n")
    assert main(["synth", str(spec), "--out", str(tmp_path / "d")]) == 0
    for role in ("clinical", "expression", "cna", "mutations"):
        assert (tmp_path / "d" / f"{role}.tsv").exists()
        assert (tmp_path / "d" / f"{role}_schema.json").exists()
    frame = load_table(tmp_path / "d" / "clinical.tsv", load_schema(tmp_path / "d" / "clinical_schema.json"))
    assert frame.equals(generate_synthetic(SynthSpec(rows=150, n_expression=10, n_cna=5,
                                                     n_mutation_genes=4, seed=3)).clinical)
    lines = [f"{r} = \"d/{r}.tsv\"\n{r}_schema = \"d/{r}_schema.json\"" for r in
             ("clinical", "expression", "cna", "mutations")]
    (tmp_path / "c.toml").write_text('seed = 1\ndataset = "genomic"\noutput_dir = "o"\nlearners = ["knn"]\n'
                                     "stratify = true\n[data]\n" + "\n".join(lines) + "\n")
    assert main(["run", str(tmp_path / "c.toml"), "--out", str(tmp_path / "o")]) == 0
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["data"]["dataset"] == "genomic" and rep["data"]["n_features"] > 0


def test_synth_bad_spec_exit_2(tmp_path):
    spec = tmp_path / "s.toml"
    spec.write_text("rows = 10\n")
    assert main(["synth", str(spec), "--out", str(tmp_path / "d")]) == 2
    spec.write_text("colour = 1\n")
    assert main(["synth", str(spec), "--out", str(tmp_path / "d")]) == 2


def test_report_rerenders_table(tmp_path, capsys):
    cfg = _toml(tmp_path / "c.toml", ["knn", "svm"], tmp_path / "out")
    main(["run", str(cfg)])
    table = (tmp_path / "out" / "table.md").read_text()
    (tmp_path / "out" / "table.md").unlink()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "table.md").read_text() == table
    assert capsys.readouterr().out == table
    assert main(["report", str(tmp_path / "nothing")]) == 2


def test_table_completeness(tmp_path):
    cfg = load_config(_toml(tmp_path / "c.toml", ["svm", "knn", "irls_l1"], tmp_path / "out"))
    rep = run_pipeline(cfg)
    lines = (tmp_path / "out" / "table.md").read_text().splitlines()[2:]
    assert [r[0] for r in rep.rows] == [line.split(" | ")[0].strip("| ") for line in lines]
    for (label, val, test), line in zip(rep.rows, lines):
        cells = [c.strip() for c in line.strip("|").split("|")]
        assert cells == [label, f"{100 * val:.1f}", f"{100 * test:.1f}"]


def test_zero_missing_rates():
    d = generate_synthetic(SynthSpec(rows=50, categorical_missing_rate=0.0, numeric_missing_rate=0.0,
                                     expression_missing_columns=0, n_expression=10, n_cna=5))
    assert not d.clinical.missing_mask.any()
    assert not d.expression.missing_mask.any()
    with pytest.raises(ValueError):
        SynthSpec(rows=19)


def test_generator_deterministic():
    a, b = generate_synthetic(SynthSpec(rows=40, seed=5)), generate_synthetic(SynthSpec(rows=40, seed=5))
    for role in ("clinical", "expression", "cna", "mutations"):
        assert a.frames()[role].equals(b.frames()[role])


@pytest.mark.slow
def test_null_signal_all_learners_near_half(tmp_path):
    tests = {n: [] for n in ALL}
    for seed in range(10):
        cfg = parse_config({"seed": seed, "dataset": "clinical", "output_dir": str(tmp_path / str(seed)),
                            "learners": ALL,
                            "synthetic": {"rows": 200, "informative": 0, "n_expression": 20, "n_cna": 10,
                                          "seed": seed}})
        for o in run_pipeline(cfg).outcomes:
            tests[o.name].append(o.test_auc)
    means = {n: float(np.mean(v)) for n, v in tests.items()}
    assert all(0.4 <= m <= 0.6 for m in means.values()), means


@pytest.mark.slow
def test_planted_signal_recovered_by_l1(tmp_path):
    aucs = []
    for seed in range(10):
        cfg = parse_config({"seed": seed, "dataset": "genomic", "output_dir": str(tmp_path / str(seed)),
                            "learners": ["irls_l1"],
                            "synthetic": {"rows": 300, "n_expression": 30, "n_cna": 10, "signal": 3.0,
                                          "genomic_weight": 1.0, "label_noise": 0.0, "time_shape": 3.0,
                                          "seed": seed}})
        aucs.append(run_pipeline(cfg).rows[0][2])
    assert np.mean(aucs) >= 0.85, aucs
