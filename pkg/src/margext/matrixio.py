"""JSON matrix files.

Layout::

    {"rows": r, "cols": c, "entries": [[re, im], ...]}          # row-major
    {"kind": "bipartite", "local_dim": d, "rows": ..., ...}     # states

Floats are written with ``repr``, the shortest string that round-trips to
the same 64-bit value, so files are byte-stable.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any

import numpy as np

KNOWN_KINDS = frozenset({"bipartite"})


class MatrixFileError(ValueError):
    pass


def _num(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x


def matrix_payload(m, local_dim: int | None = None) -> dict[str, Any]:
    m = np.asarray(m, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    doc: dict[str, Any] = {}
    if local_dim is not None:
        doc["kind"] = "bipartite"
        doc["local_dim"] = int(local_dim)
    doc["rows"] = int(m.shape[0])
    doc["cols"] = int(m.shape[1])
    doc["entries"] = [[_num(z.real), _num(z.imag)] for z in m.reshape(-1)]
    return doc


def parse_payload(doc: Any) -> tuple[np.ndarray, int | None]:
    """Validate a decoded document; return the matrix and its local dimension if any."""
    if not isinstance(doc, dict):
        raise MatrixFileError("matrix file must be a JSON object")
    kind = doc.get("kind")
    if kind is not None and kind not in KNOWN_KINDS:
        raise MatrixFileError(f"unknown kind {kind!r}")
    try:
        rows, cols, entries = int(doc["rows"]), int(doc["cols"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise MatrixFileError(f"missing or malformed field: {exc}") from None
    if rows <= 0 or cols <= 0:
        raise MatrixFileError("rows and cols must be positive")
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise MatrixFileError(f"expected {rows * cols} entries")
    vals = []
    for e in entries:
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in e)
        ):
            raise MatrixFileError("each entry must be a [re, im] pair of numbers")
        vals.append(complex(float(e[0]), float(e[1])))
    m = np.array(vals, dtype=complex).reshape(rows, cols)
    if not np.all(np.isfinite(m)):
        raise MatrixFileError("entries must be finite")
    local_dim = None
    if kind == "bipartite":
        try:
            local_dim = int(doc["local_dim"])
        except (KeyError, TypeError, ValueError):
            raise MatrixFileError("bipartite file needs an integer local_dim") from None
        if rows != cols or rows != local_dim * local_dim:
            raise MatrixFileError(f"bipartite file: {rows}x{cols} does not match local_dim {local_dim}")
    return m, local_dim


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=None, separators=(",", ":"), allow_nan=False) + "\n"


def write_matrix(path: Path | str, m, local_dim: int | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps(matrix_payload(m, local_dim)))
    return path


def read_matrix(path: Path | str) -> tuple[np.ndarray, int | None]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MatrixFileError(f"{path}: {exc}") from None
    try:
        return parse_payload(doc)
    except MatrixFileError as exc:
        raise MatrixFileError(f"{path}: {exc}") from None


def digest(*paths: Path | str) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()
