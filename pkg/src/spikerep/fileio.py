"""Text snapshot format shared by network weights and k-means codebooks.

Grammar (bit-exact):
    line 1:  <TAG>            e.g. "STDP-REPR v1" or "KMEANS v1"
    line 2:  D=<int> N=<int> lambda=<decimal> theta=<decimal>
    then D lines of N space-separated decimals (row j = incoming weights
    of unit j)

Decimals are positional (never scientific) with 12 significant digits, so a
round trip preserves values to 12 significant digits.
"""

from __future__ import annotations

import math
import re
from decimal import Decimal
from pathlib import Path

import numpy as np

WEIGHTS_TAG = "STDP-REPR v1"
KMEANS_TAG = "KMEANS v1"


class SnapshotFormatError(ValueError):
    """Malformed snapshot file."""


def format_decimal(x: float, sig: int = 12) -> str:
    """Positional decimal with ``sig`` significant digits, no exponent."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot format non-finite value {x!r}")
    d = Decimal(f"{x:.{sig}g}").normalize()
    if d == 0:
        return "0"
    return format(d, "f")


def write_matrix_file(
    path: str | Path, tag: str, matrix: np.ndarray, lam: float, theta: float
) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    D, N = matrix.shape
    lines = [tag, f"D={D} N={N} lambda={format_decimal(lam)} theta={format_decimal(theta)}"]
    for row in matrix:
        lines.append(" ".join(format_decimal(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_HEADER_RE = re.compile(
    r"^D=(\d+) N=(\d+) lambda=([0-9.+-]+) theta=([0-9.+-]+)$"
)


def read_matrix_file(path: str | Path, tag: str) -> tuple[np.ndarray, float, float]:
    """Parse a snapshot; returns (matrix, lambda, theta)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != tag:
        raise SnapshotFormatError(
            f"{path}: expected header {tag!r}, got {lines[0]!r}" if lines else f"{path}: empty file"
        )
    if len(lines) < 2:
        raise SnapshotFormatError(f"{path}: missing dimension line")
    match = _HEADER_RE.match(lines[1])
    if match is None:
        raise SnapshotFormatError(f"{path}: bad dimension line {lines[1]!r}")
    D, N = int(match.group(1)), int(match.group(2))
    lam, theta = float(match.group(3)), float(match.group(4))
    rows = [line for line in lines[2:] if line.strip()]
    if len(rows) != D:
        raise SnapshotFormatError(f"{path}: expected {D} rows, found {len(rows)}")
    matrix = np.empty((D, N), dtype=np.float64)
    for j, line in enumerate(rows):
        parts = line.split()
        if len(parts) != N:
            raise SnapshotFormatError(f"{path}: row {j} has {len(parts)} values, expected {N}")
        matrix[j] = [float(p) for p in parts]
    return matrix, lam, theta
