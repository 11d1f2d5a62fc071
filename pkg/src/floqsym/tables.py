"""CSV serialization of sweep tables and other numeric artifacts.

Floats are written with 17 significant digits so every value reads back
exactly; files use comma separators and LF line endings. An optional block
of ``# `` comment lines at the top carries run metadata, and a trailing
``# truncated`` line marks an interrupted sweep.
"""
from __future__ import annotations

import csv
import io
import os
from typing import Iterable, Mapping, Sequence

from .sweep import SweepRow, SweepTable

__all__ = ["TRUNCATION_MARKER", "emit_csv", "fmt", "read_csv", "write_rows"]

TRUNCATION_MARKER = "# truncated"
_MEASURES = ("lambda", "upsilon", "lambda_db", "upsilon_db")


def fmt(value) -> str:
    """Canonical text for a cell: 17 significant digits, empty for ``None``."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def _comment_block(metadata: Mapping[str, object] | str | None) -> str:
    if not metadata:
        return ""
    if isinstance(metadata, str):
        lines = metadata.splitlines()
    else:
        lines = [f"{k} = {v}" for k, v in metadata.items()]
    return "".join(f"# {line}".rstrip() + "\n" for line in lines)


def write_rows(
    path: str | os.PathLike,
    header: Sequence[str],
    rows: Iterable[Sequence],
    metadata: Mapping[str, object] | str | None = None,
    truncated: bool = False,
) -> None:
    """Write a generic CSV with the canonical number format."""
    buf = io.StringIO()
    buf.write(_comment_block(metadata))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    if truncated:
        buf.write(TRUNCATION_MARKER + "\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def emit_csv(
    table: SweepTable,
    path: str | os.PathLike,
    metadata: Mapping[str, object] | str | None = None,
) -> None:
    """Write ``table`` as CSV: header, then one line per row.

    Failed rows keep their parameter values and status with empty measure
    cells. ``metadata`` (a mapping or preformatted text) is prepended as
    ``# `` comment lines.
    """
    rows = (
        [*r.values, r.lambda_, r.upsilon, r.lambda_db, r.upsilon_db, r.status]
        for r in table.rows
    )
    write_rows(path, table.columns, rows, metadata, table.truncated)


def _parse_float(cell: str) -> float | None:
    return None if cell == "" else float(cell)


def read_csv(path: str | os.PathLike, model: str | None = None) -> SweepTable:
    """Parse a file written by :func:`emit_csv` back into a :class:`SweepTable`.

    The model name is taken from ``model`` or, failing that, from a
    ``name = ...`` line under ``[model]`` in the comment block. Grids are
    recovered as the distinct values of each parameter column in order of
    first appearance.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    comments, body = [], []
    truncated = False
    for line in text.split("\n"):
        if line.startswith("#"):
            if line.strip() == TRUNCATION_MARKER:
                truncated = True
            elif not body:
                comments.append(line[2:] if line.startswith("# ") else line[1:])
        elif line:
            body.append(line)
    if not body:
        raise ValueError(f"{path}: no header row")
    reader = csv.reader(body)
    header = next(reader)
    if tuple(header[-5:]) != (*_MEASURES, "status"):
        raise ValueError(f"{path}: not a sweep table (columns {header})")
    names = tuple(header[:-5])
    rows = []
    for cells in reader:
        if len(cells) != len(header):
            raise ValueError(f"{path}: row has {len(cells)} cells, expected {len(header)}")
        k = len(names)
        rows.append(SweepRow(
            tuple(float(c) for c in cells[:k]),
            *(_parse_float(c) for c in cells[k:k + 4]),
            status=cells[-1],
        ))
    grids = []
    for i in range(len(names)):
        seen: dict[float, None] = {}
        for r in rows:
            seen.setdefault(r.values[i], None)
        grids.append(tuple(seen))
    fixed = {}
    if model is None:
        section = None
        for line in comments:
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                section = s[1:-1].strip()
            elif section == "model" and "=" in s:
                key, _, val = s.partition("=")
                key, val = key.strip(), val.strip()
                if key == "name":
                    model = val
                else:
                    try:
                        fixed[key] = float(val)
                    except ValueError:
                        pass
    return SweepTable(model or "", names, tuple(grids), rows, fixed, truncated)
