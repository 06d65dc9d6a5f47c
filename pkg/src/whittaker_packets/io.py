"""Deterministic CSV and JSON writers.

Floats are written with 17 significant digits so that outputs round-trip
exactly and repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

__all__ = ["format_float", "write_csv", "write_json", "read_csv", "to_jsonable"]


def format_float(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def _cell(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def write_csv(path, columns: Mapping[str, Sequence], header: Mapping | None = None) -> Path:
    """Write equal-length columns to ``path``.

    ``header`` entries become leading ``# key=value`` lines.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(columns)
    data = [list(columns[k]) for k in names]
    n = len(data[0]) if data else 0
    if any(len(c) != n for c in data):
        raise ValueError("columns differ in length")
    lines = []
    for k, v in (header or {}).items():
        lines.append(f"# {k}={_cell(v) if v is not None else ''}")
    lines.append(",".join(names))
    for i in range(n):
        lines.append(",".join(_cell(c[i]) for c in data))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Read a file written by :func:`write_csv` into (header, columns)."""
    header, names, rows = {}, None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                k, _, v = line[2:].partition("=")
                header[k] = v
            elif names is None:
                names = line.split(",")
            elif line:
                rows.append(line.split(","))
    cols = {}
    for j, k in enumerate(names or []):
        vals = [r[j] for r in rows]
        try:
            cols[k] = np.array([float(v) for v in vals])
        except ValueError:
            cols[k] = vals
    return header, cols


def to_jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # round-trip through the fixed format keeps output byte-stable
        return float(format_float(v)) if math.isfinite(v) else None
    return obj


def write_json(path, payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(to_jsonable(payload), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    return path
