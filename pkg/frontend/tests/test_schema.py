"""CSV contract: exact header, typed cells, loud failure on every deviation."""

import csv

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from figure_renderer.schema import (
    EXPECTED_HEADER,
    SchemaError,
    SeriesRow,
    group_rows,
    pair_front_series,
    read_rows,
)


def write_csv(path, header, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(records)
    return path


GOOD_RECORDS = [
    ["0.5", "optimal|K=2", "0.125", "0.01", "3"],
    ["1.0", "optimal|K=2", "0.25", "0.0", "3"],
    ["0.5", "equal|K=2", "0.1", "0.02", "3"],
]


def test_reads_wellformed_file(tmp_path):
    path = write_csv(tmp_path / "ok.csv", EXPECTED_HEADER, GOOD_RECORDS)
    rows = read_rows(path)
    assert rows == (
        SeriesRow(0.5, "optimal|K=2", 0.125, 0.01, 3),
        SeriesRow(1.0, "optimal|K=2", 0.25, 0.0, 3),
        SeriesRow(0.5, "equal|K=2", 0.1, 0.02, 3),
    )


def test_reads_all_committed_fixtures(fixtures_dir):
    for name in ("fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv", "pareto.csv"):
        rows = read_rows(fixtures_dir / name)
        assert len(rows) > 0
        assert all(isinstance(r, SeriesRow) for r in rows)


def test_empty_file_is_schema_error(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(SchemaError, match="empty file"):
        read_rows(path)


def test_header_only_is_schema_error(tmp_path):
    path = write_csv(tmp_path / "bare.csv", EXPECTED_HEADER, [])
    with pytest.raises(SchemaError, match="no data rows"):
        read_rows(path)


def test_unknown_column_is_schema_error(tmp_path):
    header = EXPECTED_HEADER + ("confidence",)
    path = write_csv(tmp_path / "extra.csv", header, [r + ["0.9"] for r in GOOD_RECORDS])
    with pytest.raises(SchemaError, match=r"unknown columns \['confidence'\]"):
        read_rows(path)


def test_missing_column_is_schema_error(tmp_path):
    header = EXPECTED_HEADER[:-1]
    path = write_csv(tmp_path / "short.csv", header, [r[:-1] for r in GOOD_RECORDS])
    with pytest.raises(SchemaError, match=r"missing columns \['n_drops'\]"):
        read_rows(path)


def test_renamed_column_is_schema_error(tmp_path):
    header = ("sweep_value", "scheme", "avg", "stderr", "n_drops")
    path = write_csv(tmp_path / "renamed.csv", header, GOOD_RECORDS)
    with pytest.raises(SchemaError, match="does not match"):
        read_rows(path)


def test_reordered_columns_are_schema_error(tmp_path):
    header = ("scheme", "sweep_value", "mean", "stderr", "n_drops")
    path = write_csv(tmp_path / "reordered.csv", header, GOOD_RECORDS)
    with pytest.raises(SchemaError, match="does not match"):
        read_rows(path)


def test_nonnumeric_cell_is_schema_error_with_line(tmp_path):
    records = [GOOD_RECORDS[0], ["0.5", "equal", "not-a-number", "0.0", "3"]]
    path = write_csv(tmp_path / "badcell.csv", EXPECTED_HEADER, records)
    with pytest.raises(SchemaError, match=r"badcell\.csv:3"):
        read_rows(path)


def test_ragged_row_is_schema_error(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text(",".join(EXPECTED_HEADER) + "\n0.5,optimal,0.1\n")
    with pytest.raises(SchemaError, match="3 fields, expected 5"):
        read_rows(path)


def test_group_rows_rejects_unknown_column(tmp_path):
    path = write_csv(tmp_path / "ok.csv", EXPECTED_HEADER, GOOD_RECORDS)
    with pytest.raises(SchemaError, match="unknown grouping column 'flavor'"):
        group_rows(read_rows(path), key="flavor")


# printable labels without csv metacharacters, matching what producers emit
scheme_text = st.text(
    st.sampled_from("abcdefgKk0123456789|;=.- "), min_size=1, max_size=20
).map(str.strip).filter(bool)
finite = st.floats(allow_nan=False, allow_infinity=False)
row_strategy = st.builds(
    SeriesRow,
    sweep_value=finite,
    scheme=scheme_text,
    mean=finite,
    stderr=finite,
    n_drops=st.integers(min_value=0, max_value=10**6),
)


@settings(max_examples=60, deadline=None)
@given(rows=st.lists(row_strategy, min_size=1, max_size=30))
def test_roundtrip_and_group_order(tmp_path_factory, rows):
    # repr floats roundtrip exactly, so a rewrite of what we read must be
    # equal field for field, and grouping must keep file order
    path = tmp_path_factory.mktemp("prop") / "prop.csv"
    write_csv(
        path,
        EXPECTED_HEADER,
        [
            [repr(r.sweep_value), r.scheme, repr(r.mean), repr(r.stderr), str(r.n_drops)]
            for r in rows
        ],
    )
    parsed = read_rows(path)
    assert parsed == tuple(rows)
    grouped = group_rows(parsed)
    assert list(grouped) == list(dict.fromkeys(r.scheme for r in rows))
    for scheme, block in grouped.items():
        assert block == tuple(r for r in rows if r.scheme == scheme)


FRONT_RECORDS = [
    ["0.0", "base|dl", "1.0", "0.0", "1"],
    ["1.0", "base|dl", "2.0", "0.0", "1"],
    ["0.0", "base|ul", "3.0", "0.0", "1"],
    ["1.0", "base|ul", "2.5", "0.0", "1"],
]


def test_front_pairing_joins_on_label(tmp_path):
    path = write_csv(tmp_path / "front.csv", EXPECTED_HEADER, FRONT_RECORDS)
    paired = pair_front_series(read_rows(path))
    assert list(paired) == ["base"]
    dl, ul = paired["base"]
    assert [r.mean for r in dl] == [1.0, 2.0]
    assert [r.mean for r in ul] == [3.0, 2.5]


def test_front_scheme_without_suffix_is_schema_error(tmp_path):
    records = FRONT_RECORDS + [["0.0", "optimal", "1.0", "0.0", "1"]]
    path = write_csv(tmp_path / "front.csv", EXPECTED_HEADER, records)
    with pytest.raises(SchemaError, match="must look like"):
        pair_front_series(read_rows(path))


def test_front_missing_counterpart_is_schema_error(tmp_path):
    path = write_csv(tmp_path / "front.csv", EXPECTED_HEADER, FRONT_RECORDS[:2])
    with pytest.raises(SchemaError, match="needs both dl and ul"):
        pair_front_series(read_rows(path))


def test_front_mismatched_grids_are_schema_error(tmp_path):
    records = FRONT_RECORDS[:3] + [["0.5", "base|ul", "2.5", "0.0", "1"]]
    path = write_csv(tmp_path / "front.csv", EXPECTED_HEADER, records)
    with pytest.raises(SchemaError, match="sweep grids differ"):
        pair_front_series(read_rows(path))
