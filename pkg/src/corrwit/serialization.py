"""
Deterministic JSON / CSV output.

Floats are written with FLOAT_DIGITS significant digits so that identical
inputs produce identical bytes. Complex matrices travel as row-major lists of
[re, im] pairs.
"""

import csv
import io
import json
import math
import re
from typing import Any, Iterable, List, Mapping, Sequence

import numpy as np

from corrwit import config
from corrwit.errors import ParseError

_FLOAT_TAG = "\x00f:"
_FLOAT_RE = re.compile(r'"\\u0000f:([^"]*)"')


def format_float(x: float, digits: int = config.FLOAT_DIGITS) -> str:
    return format(float(x), f".{digits}g")


def _prepare(obj: Any) -> Any:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return None if obj is None else bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return _FLOAT_TAG + format_float(x)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_prepare(obj.real), _prepare(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist())
    if isinstance(obj, Mapping):
        return {str(k): _prepare(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return _prepare(obj.to_dict())
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with fixed-precision floats (no trailing newline)."""
    text = json.dumps(_prepare(obj), indent=indent)
    return _FLOAT_RE.sub(r"\1", text)


def loads(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e


def matrix_to_pairs(matrix: np.ndarray) -> List[List[float]]:
    """Row-major [[re, im], ...] for a complex matrix."""
    flat = np.asarray(matrix, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def pairs_to_matrix(pairs: Sequence[Sequence[float]], dim: int) -> np.ndarray:
    try:
        arr = np.asarray(pairs, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"matrix entries are not [re, im] pairs: {e}") from e
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ParseError(f"matrix entries must be [re, im] pairs, got shape {arr.shape}")
    if arr.shape[0] != dim * dim:
        raise ParseError(f"expected {dim * dim} entries for dim {dim}, got {arr.shape[0]}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)


def dumps_csv(rows: Iterable[Mapping[str, Any]],
              columns: Sequence[str] = config.CSV_COLUMNS,
              schema: str = config.CSV_SCHEMA) -> str:
    """CSV text with a versioned comment line and a fixed header."""
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        cells = []
        for col in columns:
            value = row.get(col)
            if isinstance(value, (float, np.floating)):
                cells.append(format_float(value))
            elif value is None:
                cells.append("")
            else:
                cells.append(str(value))
        writer.writerow(cells)
    return buf.getvalue()
