"""CSV and manifest writers.

CSV files have the header ``t,n,value,source``, LF line endings and
``repr``-independent fixed formatting (16 significant digits), so identical
inputs give byte-identical files on any locale.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

HEADER = ("t", "n", "value", "source")


def format_float(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return format(x, ".15e")


def write_rows(path, rows) -> Path:
    """Write ``(t, n, value, source)`` rows; None becomes an empty field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for t, n, value, source in rows:
            writer.writerow([format_float(t), "" if n is None else int(n),
                             format_float(value), source])
    return path


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [(None if r["t"] == "" else float(r["t"]),
                 None if r["n"] == "" else int(r["n"]),
                 float(r["value"]), r["source"]) for r in reader]


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
