"""JSON and CSV writers for run reports.

Floats are written with 17 significant digits so reports round-trip and
compare byte for byte across runs.
"""

from __future__ import annotations

import io
import json
import math

import numpy as np

SCHEMA = 1


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def sequence_csv(columns: dict, header: dict) -> str:
    """index-aligned columns; `header` goes into leading '#' lines."""
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    names = list(columns)
    buf.write(",".join(["index", *names]) + "\n")
    length = max(len(c) for c in columns.values())
    for i in range(length):
        row = [str(i + 1)]
        for name in names:
            col = columns[name]
            row.append(_float(float(col[i])) if i < len(col) else "")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def samples_csv(samples, header: dict) -> str:
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    buf.write("trial,points\n")
    for t, pts in enumerate(samples):
        buf.write(f"{t},{' '.join(str(p) for p in pts)}\n")
    return buf.getvalue()


def matrix_csv(mat, header: dict) -> str:
    """Row-major matrix dump after '#' header lines."""
    mat = np.asarray(mat, dtype=float)
    buf = io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={v}\n")
    for row in mat:
        buf.write(",".join(_float(float(x)) for x in row) + "\n")
    return buf.getvalue()
