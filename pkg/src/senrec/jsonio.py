"""Complex matrices as JSON: ``{"rows": m, "cols": k, "data": [[re, im], ...]}``, row-major.

Vectors use ``cols = 1``.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np


def matrix_from_doc(doc) -> np.ndarray:
    if not isinstance(doc, dict) or not {"rows", "cols", "data"} <= doc.keys():
        raise ValueError('matrix JSON needs "rows", "cols" and "data"')
    rows, cols, data = doc["rows"], doc["cols"], doc["data"]
    if not (isinstance(rows, int) and isinstance(cols, int) and rows > 0 and cols > 0):
        raise ValueError(f"rows/cols must be positive integers, got {rows!r}, {cols!r}")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValueError(f"data must list rows*cols = {rows * cols} entries")
    values = []
    for k, pair in enumerate(data):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in pair)
        ):
            raise ValueError(f"data[{k}] must be a [re, im] pair of numbers, got {pair!r}")
        if not all(math.isfinite(x) for x in pair):
            raise ValueError(f"data[{k}] is not finite")
        values.append(complex(pair[0], pair[1]))
    return np.array(values, dtype=complex).reshape(rows, cols)


def matrix_to_doc(matrix) -> dict:
    a = np.asarray(matrix, dtype=complex)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    return {
        "rows": int(a.shape[0]),
        "cols": int(a.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
    }


def read_matrix(path: str | Path) -> np.ndarray:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: malformed JSON ({exc})") from None
    try:
        return matrix_from_doc(doc)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def read_vector(path: str | Path) -> np.ndarray:
    m = read_matrix(path)
    if 1 not in m.shape:
        raise ValueError(f"{path}: expected a vector (cols = 1), got {m.shape[0]}x{m.shape[1]}")
    return m.reshape(-1)


def write_matrix(path: str | Path, matrix) -> None:
    Path(path).write_text(json.dumps(matrix_to_doc(matrix), indent=1) + "\n")
