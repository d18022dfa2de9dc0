"""CSV with '#'-prefixed metadata header lines, and JSON helpers.

Floats are written with 17 significant digits so files round-trip exactly
and identical inputs give byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # Enum
        return obj.value
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(dumps(obj))


def write_csv(path, columns: dict, meta: dict | None = None):
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    n = len(data[0])
    if any(len(d) != n for d in data):
        raise ValueError("columns have different lengths")
    lines = []
    for key, value in (meta or {}).items():
        lines.append(f"# {key}: {json.dumps(_jsonable(value), sort_keys=True)}")
    lines.append(",".join(names))
    stacked = np.column_stack(data) if names else np.empty((0, 0))
    for row in stacked:
        lines.append(",".join(format(float(x), ".17g") for x in row))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Return ``(meta, columns)`` from a file written by :func:`write_csv`."""
    meta, header, rows = {}, None, []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            try:
                meta[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                meta[key.strip()] = value.strip()
            continue
        if header is None:
            header = [h.strip() for h in line.split(",")]
            continue
        rows.append([float(x) for x in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no column header")
    arr = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return meta, {name: arr[:, i] for i, name in enumerate(header)}
