from __future__ import annotations

import numpy as np
import pytest

from faultforge.corpus import (
    DEFAULT_FEATURES,
    AccessLog,
    Dataset,
    FeatureSchema,
    MetricRow,
    check_reference,
    deduplicate,
    load_csv,
    load_reference,
    pool,
    summarize,
    to_csv,
)
from faultforge.errors import CorpusParseError, SchemaError


def _row(project="ant", version="1.7", name="A", metrics=None, bugs=0):
    metrics = metrics if metrics is not None else tuple(float(i) for i in range(len(DEFAULT_FEATURES)))
    return MetricRow(project, version, name, tuple(metrics), bugs)


def test_ant_summary_matches_reference(promise_csv):
    d = load_csv(promise_csv("ant-1.7.csv", 746, 166))
    (s,) = summarize(d)
    assert s.line() == "ant-1.7 746 166 0.223"
    assert check_reference([s]) == [("ant-1.7", True, "746 / 166")]


def test_synapse_counts_match_reference(promise_csv):
    d = load_csv(promise_csv("synapse-1.0.csv", 158, 21))
    (s,) = summarize(d)
    assert (s.instances, s.defective) == (158, 21)
    assert check_reference([s])[0][1] is True


def test_check_reference_reports_mismatch(promise_csv):
    d = load_csv(promise_csv("ant-1.7.csv", 100, 10))
    (result,) = check_reference(summarize(d))
    assert result[1] is False
    assert "expected 746 / 166" in result[2]


def test_reference_table_has_nineteen_projects():
    table = load_reference()
    assert len(table) == 19
    assert table["ant-1.7"]["instances"] == 746


def test_bug_counts_are_binarised(tmp_path):
    path = tmp_path / "x-1.0.csv"
    header = ",".join(["name", "version", "name", *DEFAULT_FEATURES, "bug"])
    metrics = ",".join("1" for _ in DEFAULT_FEATURES)
    path.write_text(f"{header}\nx,1.0,A,{metrics},3\nx,1.0,B,{metrics},0\n", encoding="utf-8")
    d = load_csv(path)
    assert d.y.tolist() == [1, 0]
    assert d.bug_counts.tolist() == [3, 0]


def test_empty_file_is_schema_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_csv(path)


def test_header_only_file_has_no_rows(tmp_path):
    path = tmp_path / "ant-1.7.csv"
    path.write_text(",".join(["name", "version", "name", *DEFAULT_FEATURES, "bug"]) + "\n", encoding="utf-8")
    d = load_csv(path)
    assert d.n == 0
    assert summarize(d) == []


def test_non_numeric_cell_reports_row_and_column(tmp_path):
    path = tmp_path / "ant-1.7.csv"
    header = ",".join(["name", "version", "name", *DEFAULT_FEATURES, "bug"])
    good = ",".join("1" for _ in DEFAULT_FEATURES)
    bad = ",".join(["1", "1", "1", "abc"] + ["1"] * (len(DEFAULT_FEATURES) - 4))
    path.write_text(f"{header}\nant,1.7,A,{good},0\nant,1.7,B,{bad},1\n", encoding="utf-8")
    with pytest.raises(CorpusParseError) as exc:
        load_csv(path)
    assert exc.value.row == 3
    assert exc.value.column == "cbo"
    assert "abc" in str(exc.value)


def test_fractional_bug_count_is_rejected(tmp_path):
    path = tmp_path / "ant-1.7.csv"
    header = ",".join(["name", "version", "name", *DEFAULT_FEATURES, "bug"])
    metrics = ",".join("1" for _ in DEFAULT_FEATURES)
    path.write_text(f"{header}\nant,1.7,A,{metrics},1.5\n", encoding="utf-8")
    with pytest.raises(CorpusParseError, match="non-negative integer"):
        load_csv(path)


def test_wrong_defect_column_is_schema_error(tmp_path):
    path = tmp_path / "ant-1.7.csv"
    header = ",".join(["name", "version", "name", *DEFAULT_FEATURES, "label"])
    path.write_text(header + "\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="defect column"):
        load_csv(path)


def test_metric_order_mismatch_is_schema_error(tmp_path):
    names = list(DEFAULT_FEATURES)
    names[0], names[1] = names[1], names[0]
    path = tmp_path / "ant-1.7.csv"
    path.write_text(",".join(["name", "version", "name", *names, "bug"]) + "\n", encoding="utf-8")
    with pytest.raises(SchemaError, match="metric column 1"):
        load_csv(path)


def test_missing_cells_become_nan(promise_csv):
    d = load_csv(promise_csv("ant-1.7.csv", 50, 10, missing=5))
    assert 1 <= int(np.isnan(d.X).sum()) <= 5


def test_project_and_version_from_file_name(tmp_path):
    path = tmp_path / "camel-1.6.csv"
    header = ",".join([*DEFAULT_FEATURES, "bug"])
    metrics = ",".join("2" for _ in DEFAULT_FEATURES)
    path.write_text(f"{header}\n{metrics},0\n{metrics},1\n", encoding="utf-8")
    d = load_csv(path)
    assert d.provenance.tolist() == ["camel-1.6", "camel-1.6"]


def test_to_csv_reload_is_identical(promise_csv, tmp_path):
    d = load_csv(promise_csv("ant-1.7.csv", 40, 9, missing=3))
    again = load_csv(to_csv(d, tmp_path / "out" / "ant-1.7.csv"))
    np.testing.assert_array_equal(np.isnan(again.X), np.isnan(d.X))
    np.testing.assert_array_equal(np.nan_to_num(again.X), np.nan_to_num(d.X))
    assert again.y.tolist() == d.y.tolist()
    assert again.bug_counts.tolist() == d.bug_counts.tolist()
    assert again.provenance.tolist() == d.provenance.tolist()


def test_deduplicate_keeps_first_of_identical_rows():
    d = Dataset.from_rows([_row(name="A", bugs=1), _row(name="B", bugs=2), _row(name="C", bugs=0)])
    out = deduplicate(d)
    # A and B share metrics and label; C differs in label
    assert out.n == 2
    assert out.class_names.tolist() == ["A", "C"]


def test_deduplicate_without_duplicates_is_identity():
    rows = [_row(name=str(i), metrics=[float(i)] * len(DEFAULT_FEATURES)) for i in range(5)]
    assert deduplicate(Dataset.from_rows(rows)).n == 5


def test_deduplicate_is_idempotent(promise_csv):
    d = load_csv(promise_csv("ant-1.7.csv", 30, 8, seed=3))
    doubled = pool([d, d])
    once = deduplicate(doubled)
    twice = deduplicate(once)
    assert once.n == d.n
    np.testing.assert_array_equal(twice.X, once.X)
    assert twice.y.tolist() == once.y.tolist()
    assert twice.class_names.tolist() == once.class_names.tolist()


def test_pool_concatenates_and_keeps_provenance():
    a = Dataset.from_rows([_row(project="ant"), _row(project="ant", bugs=1)])
    b = Dataset.from_rows([_row(project="jedit", version="3.2", bugs=1)])
    pooled = pool([a, b])
    assert pooled.n == 3
    assert [s.line() for s in summarize(pooled)] == ["ant-1.7 2 1 0.500", "jedit-3.2 1 1 1.000"]


def test_pool_rejects_different_schemas():
    a = Dataset.from_rows([_row()])
    b = Dataset(schema=FeatureSchema(("a", "b")), X=np.zeros((1, 2)), y=[0], provenance=["x"])
    with pytest.raises(SchemaError):
        pool([a, b])


def test_schema_rejects_duplicate_names():
    with pytest.raises(SchemaError, match="duplicate"):
        FeatureSchema(("wmc", "WMC"))


def test_dataset_arrays_are_read_only():
    d = Dataset.from_rows([_row()])
    with pytest.raises(ValueError):
        d.X[0, 0] = 5.0


def test_take_records_rows_in_access_log():
    d = Dataset.from_rows([_row(name=str(i), bugs=i % 2) for i in range(6)])
    log = AccessLog()
    X, y = d.take([1, 3], log, "fit")
    d.take([0], log, "apply")
    assert X.shape == (2, len(DEFAULT_FEATURES))
    assert y.tolist() == [1, 1]
    assert log.rows("fit") == {1, 3}
    assert log.rows("apply") == {0}
    X[0, 0] = -1.0  # copies, not views
    assert d.X[1, 0] == 0.0
