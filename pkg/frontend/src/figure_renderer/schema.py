"""CSV contract for the experiment artifacts this package renders.

The producing pipeline writes exactly one header::

    sweep_value,scheme,mean,stderr,n_drops

Anything else (extra, missing, renamed, or reordered columns, unparsable
cells, an empty body) is a hard :class:`SchemaError`. A near-miss schema
silently plotted would show the wrong quantity with full confidence, so the
reader refuses instead of coercing.
"""

import csv
from dataclasses import dataclass

__all__ = [
    "EXPECTED_HEADER",
    "SchemaError",
    "SeriesRow",
    "read_rows",
    "group_rows",
    "pair_front_series",
]

EXPECTED_HEADER = ("sweep_value", "scheme", "mean", "stderr", "n_drops")


class SchemaError(ValueError):
    """Input CSV does not match the experiment artifact contract."""


@dataclass(frozen=True)
class SeriesRow:
    sweep_value: float
    scheme: str
    mean: float
    stderr: float
    n_drops: int


def read_rows(path):
    """Parse one artifact CSV into SeriesRow tuples, validating everything.

    Raises SchemaError on any deviation from EXPECTED_HEADER, on cells that
    do not parse as their column's type, and on a file with no data rows.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header {list(EXPECTED_HEADER)}") from None
        if header != EXPECTED_HEADER:
            unknown = [c for c in header if c not in EXPECTED_HEADER]
            missing = [c for c in EXPECTED_HEADER if c not in header]
            raise SchemaError(
                f"{path}: header {list(header)} does not match {list(EXPECTED_HEADER)}"
                f" (unknown columns {unknown}, missing columns {missing})"
            )
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(EXPECTED_HEADER):
                raise SchemaError(
                    f"{path}:{lineno}: {len(record)} fields, expected {len(EXPECTED_HEADER)}"
                )
            try:
                rows.append(
                    SeriesRow(
                        sweep_value=float(record[0]),
                        scheme=record[1],
                        mean=float(record[2]),
                        stderr=float(record[3]),
                        n_drops=int(record[4]),
                    )
                )
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise SchemaError(f"{path}: header only, no data rows")
        return tuple(rows)


def group_rows(rows, key="scheme"):
    """Group rows by a column, preserving file order of keys and rows.

    The grouping column must be one of EXPECTED_HEADER; anything else is a
    SchemaError, consistent with the no-guessing rule for input columns.
    """
    if key not in EXPECTED_HEADER:
        raise SchemaError(f"unknown grouping column {key!r}; expected one of {list(EXPECTED_HEADER)}")
    grouped = {}
    for row in rows:
        grouped.setdefault(getattr(row, key), []).append(row)
    return {k: tuple(v) for k, v in grouped.items()}


def pair_front_series(rows):
    """Join "<label>|dl" / "<label>|ul" schemes into per-label point lists.

    Front CSVs carry two rows per swept weight: the scheme suffix names the
    objective, the shared prefix names the configuration. Returns
    {label: (dl_rows, ul_rows)} with both sides checked to sit on the same
    sweep grid in the same order; any unpaired or missorted series is a
    SchemaError.
    """
    labels = {}
    for scheme, series in group_rows(rows).items():
        prefix, _, axis = scheme.rpartition("|")
        if not prefix or axis not in ("dl", "ul"):
            raise SchemaError(
                f"front scheme {scheme!r} must look like '<label>|dl' or '<label>|ul'"
            )
        slot = labels.setdefault(prefix, {})
        if axis in slot:
            raise SchemaError(f"front series {prefix!r} has duplicate {axis!r} blocks")
        slot[axis] = series
    paired = {}
    for prefix, axes in labels.items():
        if set(axes) != {"dl", "ul"}:
            have = ", ".join(sorted(axes))
            raise SchemaError(f"front series {prefix!r} has only {have!r}, needs both dl and ul")
        dl, ul = axes["dl"], axes["ul"]
        if [r.sweep_value for r in dl] != [r.sweep_value for r in ul]:
            raise SchemaError(f"front series {prefix!r}: dl and ul sweep grids differ")
        paired[prefix] = (dl, ul)
    return paired
