"""Canonical JSON encoding for models, states and reports.

Complex matrices travel as arrays of rows, each entry a two-element array
[re, im]. All floats are emitted with 17 significant digits so that a
decode/encode round trip is bit-exact for any IEEE double.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .errors import BadShape


def format_float(x: float) -> str:
    """Shortest-faithful decimal for a double: 17 significant digits."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def encode_matrix(m: np.ndarray) -> list[list[list[float]]]:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise BadShape(f"expected a 2-d matrix, got ndim={m.ndim}")
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def decode_matrix(obj: Any) -> np.ndarray:
    """Inverse of encode_matrix. Bare numbers are accepted as real entries."""
    if not isinstance(obj, list) or not obj:
        raise BadShape("matrix must be a non-empty list of rows")
    rows = []
    width = None
    for row in obj:
        if not isinstance(row, list):
            raise BadShape("matrix row must be a list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise BadShape("ragged matrix rows")
        entries = []
        for e in row:
            if isinstance(e, (int, float)):
                entries.append(complex(e))
            elif isinstance(e, list) and len(e) == 2:
                entries.append(complex(float(e[0]), float(e[1])))
            else:
                raise BadShape(f"matrix entry must be [re, im] or a number, got {e!r}")
        rows.append(entries)
    return np.array(rows, dtype=complex)


def _canon(obj: Any) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return _canon([float(obj.real), float(obj.imag)])
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2:
            return _canon(encode_matrix(obj))
        return _canon(obj.tolist())
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        inner = ", ".join(f"{json.dumps(str(k))}: {_canon(v)}" for k, v in items)
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    raise TypeError(f"cannot canonically encode {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, 17-digit floats."""
    return _canon(obj)


def dump_json(obj: Any, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))
        fh.write("\n")
