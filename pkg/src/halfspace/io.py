"""Structured text formats: JSON complex arrays and CSV report rows."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

CSV_FLOAT_FORMAT = "{:.17g}"


def array_to_json(arr) -> dict:
    """Row-major complex array as ``{"shape": [...], "data": [[re, im], ...]}``."""
    arr = np.asarray(arr, dtype=complex)
    flat = arr.ravel(order="C")
    return {"shape": list(arr.shape), "data": [[float(z.real), float(z.imag)] for z in flat]}


def array_from_json(obj: dict) -> np.ndarray:
    data = np.asarray(obj["data"], dtype=float).reshape(-1, 2)
    return (data[:, 0] + 1j * data[:, 1]).reshape(obj["shape"], order="C")


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return CSV_FLOAT_FORMAT.format(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        raise TypeError("complex values must be split into real columns before CSV export")
    return str(value)


def rows_to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    """Render dict rows as CSV text (header row, ``,`` separator, 17 digits)."""
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c, "")) for c in columns])
    return buf.getvalue()


def write_csv(rows: list[dict], path, columns: list[str] | None = None) -> None:
    Path(path).write_text(rows_to_csv(rows, columns), encoding="utf-8")


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
