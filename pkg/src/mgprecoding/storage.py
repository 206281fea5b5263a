"""Versioned JSON files for complex matrices (channel drops, precoders).

Layout of a file::

    {"header": {"format_version": 1, "kind": "channel", "rows": K, "cols": N, ...},
     "entries": [[re, im], ...]}

Entries are row-major. Floats are written with ``repr`` precision so a
matrix survives a round trip bit for bit.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

__all__ = ["FORMAT_VERSION", "DataFileError", "dump_matrix", "load_matrix",
           "write_matrix", "read_matrix"]

FORMAT_VERSION = 1
_KINDS = ("channel", "precoder", "feeder")


class DataFileError(ValueError):
    """A matrix file is unreadable, truncated or inconsistent with its header."""


def dump_matrix(matrix, kind: str, **header) -> str:
    M = np.asarray(matrix, dtype=complex)
    if M.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    if not np.all(np.isfinite(M)):
        raise ValueError("refusing to store non-finite entries")
    head = {"format_version": FORMAT_VERSION, "kind": kind,
            "rows": int(M.shape[0]), "cols": int(M.shape[1])}
    clash = set(head) & set(header)
    if clash:
        raise ValueError(f"reserved header keys: {sorted(clash)}")
    head.update(header)
    flat = M.ravel(order="C")
    doc = {"header": head, "entries": [[float(z.real), float(z.imag)] for z in flat]}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def write_matrix(path, matrix, kind: str, **header) -> Path:
    path = Path(path)
    path.write_text(dump_matrix(matrix, kind, **header))
    return path


def load_matrix(text: str):
    """Parse a matrix document. Returns ``(matrix, header)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFileError(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "header" not in doc or "entries" not in doc:
        raise DataFileError("missing header or entries")
    head = doc["header"]
    if not isinstance(head, dict):
        raise DataFileError("header must be an object")
    version = head.get("format_version")
    if version != FORMAT_VERSION:
        raise DataFileError(f"unsupported format_version {version!r}")
    if head.get("kind") not in _KINDS:
        raise DataFileError(f"unknown kind {head.get('kind')!r}")
    rows, cols = head.get("rows"), head.get("cols")
    if not (isinstance(rows, int) and isinstance(cols, int) and rows >= 0 and cols >= 0):
        raise DataFileError("rows and cols must be non-negative integers")
    entries = doc["entries"]
    if not isinstance(entries, list) or len(entries) != rows * cols:
        raise DataFileError(f"expected {rows * cols} entries")
    out = np.empty(rows * cols, dtype=complex)
    for i, e in enumerate(entries):
        if (not isinstance(e, list) or len(e) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in e)):
            raise DataFileError(f"entry {i} is not a [re, im] pair")
        if not (math.isfinite(e[0]) and math.isfinite(e[1])):
            raise DataFileError(f"entry {i} is not finite")
        out[i] = complex(e[0], e[1])
    return out.reshape(rows, cols), head


def read_matrix(path):
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataFileError(f"cannot read {path}: {exc}") from None
    return load_matrix(text)
