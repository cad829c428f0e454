import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from brcaml.tabular import (
    ColumnKind,
    ColumnSpec,
    IntegrityError,
    SchemaSpec,
    TableError,
    frame_from_columns,
    intersect_patients,
    load_table,
    schema_of,
    write_table,
)

SCHEMA = SchemaSpec("PATIENT_ID", {"AGE": ColumnSpec(ColumnKind.NUMERIC), "GRADE": ColumnSpec(ColumnKind.CATEGORICAL)})


def _write(tmp_path, text, name="t.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_na_in_numeric_column_is_flagged(tmp_path):
    p = _write(tmp_path, "PATIENT_ID\tAGE\tGRADE\nA\t50\tI\nB\tNA\tII\nC\t61.5\tI\n")
    f = load_table(p, SCHEMA)
    assert f.n_rows == 3
    assert f.missing("AGE").tolist() == [False, True, False]
    assert not f.missing("GRADE").any()
    assert f.column("AGE")[2] == 61.5


def test_undeclared_header_column_is_named(tmp_path):
    p = _write(tmp_path, "PATIENT_ID\tAGE\tSTAGE\nA\t1\tx\n")
    with pytest.raises(TableError, match="STAGE"):
        load_table(p, SCHEMA)


def test_complete_file_has_no_missing(tmp_path):
    schema = SchemaSpec("PATIENT_ID", {"AGE": ColumnSpec(ColumnKind.NUMERIC)})
    f = load_table(_write(tmp_path, "PATIENT_ID\tAGE\nA\t1\nB\t2\n"), schema)
    assert f.missing_mask.shape == (2, 1)
    assert not f.missing_mask.any()


def test_bad_number_names_line_and_column(tmp_path):
    p = _write(tmp_path, "PATIENT_ID\tAGE\tGRADE\nA\t50\tI\nB\tfifty\tII\n")
    with pytest.raises(TableError, match=r"line 3.*AGE"):
        load_table(p, SCHEMA)


def test_duplicate_id_is_integrity_error(tmp_path):
    p = _write(tmp_path, "PATIENT_ID\tAGE\tGRADE\nA\t50\tI\nA\t51\tII\n")
    with pytest.raises(IntegrityError):
        load_table(p, SCHEMA)


def test_comma_delimiter_and_custom_tokens(tmp_path):
    p = _write(tmp_path, "PATIENT_ID,AGE,GRADE\nA,?,I\nB,3,\n", "t.csv")
    f = load_table(p, SCHEMA, missing_tokens={"?"}, delimiter=",")
    assert f.missing("AGE").tolist() == [True, False]
    # "" is not a token here, so the empty grade is a real (empty) category
    assert f.missing("GRADE").tolist() == [False, False]


def test_duplicate_categories_rejected():
    with pytest.raises(TableError):
        ColumnSpec(ColumnKind.CATEGORICAL, ("a", "a"))


def test_frames_are_read_only():
    f = frame_from_columns({"x": [1.0, 2.0]}, {"x": ColumnKind.NUMERIC}, ["a", "b"])
    with pytest.raises(ValueError):
        f.missing_mask[0, 0] = True


def _frame(ids):
    return frame_from_columns({"v": [float(i) for i in range(len(ids))]}, {"v": ColumnKind.NUMERIC}, ids)


def test_intersection_examples():
    a, b = intersect_patients([_frame(["A", "B", "C"]), _frame(["D", "C", "B"])])
    assert a.patient_ids.tolist() == ["B", "C"] == b.patient_ids.tolist()
    assert a.column("v").tolist() == [1.0, 2.0]
    assert b.column("v").tolist() == [2.0, 1.0]
    with pytest.raises(TableError):
        intersect_patients([_frame(["A"]), _frame(["B"])])


def test_identical_frames_unchanged_up_to_order():
    f = _frame(["C", "A", "B"])
    (g,) = intersect_patients([f])
    assert sorted(f.patient_ids.tolist()) == g.patient_ids.tolist()


ids_st = st.lists(st.text("ABCDEFGH", min_size=1, max_size=3), min_size=1, max_size=12, unique=True)


@given(ids_st, ids_st)
def test_intersection_idempotent(x, y):
    common = set(x) & set(y)
    if not common:
        with pytest.raises(TableError):
            intersect_patients([_frame(x), _frame(y)])
        return
    once = intersect_patients([_frame(x), _frame(y)])
    twice = intersect_patients(once)
    assert all(a.equals(b) for a, b in zip(once, twice))
    assert once[0].patient_ids.tolist() == sorted(common)


cell = st.one_of(st.none(), st.floats(allow_nan=False, allow_infinity=False, width=64))
cat = st.one_of(st.none(), st.sampled_from(["x", "y", "long value", "-1"]))


@given(st.data())
def test_write_load_round_trip(tmp_path_factory, data):
    n = data.draw(st.integers(1, 8))
    nums = data.draw(st.lists(cell, min_size=n, max_size=n))
    cats = data.draw(st.lists(cat, min_size=n, max_size=n))
    f = frame_from_columns({"num": nums, "cat": cats},
                           {"num": ColumnKind.NUMERIC, "cat": ColumnKind.CATEGORICAL},
                           [f"P{i}" for i in range(n)])
    path = tmp_path_factory.mktemp("rt") / "f.tsv"
    write_table(f, path)
    g = load_table(path, schema_of(f))
    assert f.equals(g)
    assert np.array_equal(f.column("num")[~f.missing("num")], g.column("num")[~g.missing("num")])
