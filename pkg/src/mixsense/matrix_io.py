"""Plain-text matrix files: header ``rows cols``, then one space-separated row per line.

The format is shared by affinity and mixture matrices.  Values are written with
17 significant digits so that export followed by import reproduces every float
bit-exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ParseError


def write_matrix(path, entries: np.ndarray) -> None:
    entries = np.asarray(entries, dtype=float)
    if entries.ndim != 2:
        raise ParseError(f"expected a 2-D matrix, got shape {entries.shape}")
    rows, cols = entries.shape
    lines = [f"{rows} {cols}"]
    for row in entries:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise ParseError(f"{path}: header must be 'rows cols', got {lines[0]!r}")
    try:
        rows, cols = int(header[0]), int(header[1])
    except ValueError as exc:
        raise ParseError(f"{path}: bad header {lines[0]!r}") from exc
    if rows < 1 or cols < 1 or len(lines) - 1 != rows:
        raise ParseError(f"{path}: expected {rows} data rows, found {len(lines) - 1}")
    data = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ParseError(f"{path}:{i}: non-numeric entry") from exc
        if len(row) != cols:
            raise ParseError(f"{path}:{i}: expected {cols} columns, found {len(row)}")
        data.append(row)
    return np.array(data, dtype=float)
