"""Quantization tables: the reference baseline tables, the quality-factor
scaling rule of the de-facto standard encoder, and quality-factor estimation
from tables found in a stream.

All tables in this package are stored in natural (row-major) order; the
zig-zag wire order is converted at parse/emit time.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from detbias.errors import DomainError

# Zig-zag scan: ZIGZAG[k] = natural-order index of the k-th coefficient on
# the wire.
ZIGZAG = np.array([
    0, 1, 8, 16, 9, 2, 3, 10,
    17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
], dtype=np.int64)

# Reference luminance/chrominance tables of the de-facto baseline encoder
# (natural order).
BASE_LUMA = np.array([
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
], dtype=np.int64)

BASE_CHROMA = np.array([
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
], dtype=np.int64)


@dataclass(frozen=True)
class QuantTables:
    """Luminance (always) and chrominance (absent for grayscale) 8x8 tables,
    flattened to 64 entries in natural order."""

    luma: tuple[int, ...]
    chroma: tuple[int, ...] | None = None

    def __post_init__(self):
        for name, tbl in (("luma", self.luma), ("chroma", self.chroma)):
            if tbl is None:
                continue
            if len(tbl) != 64:
                raise DomainError(f"{name} table must have 64 entries")
            if not all(1 <= v <= 255 for v in tbl):
                raise DomainError(f"{name} table entry outside [1, 255]")


def natural_from_zigzag(values) -> tuple[int, ...]:
    """Reorder 64 wire-order entries into natural order."""
    out = [0] * 64
    for k, v in enumerate(values):
        out[ZIGZAG[k]] = int(v)
    return tuple(out)


def zigzag_from_natural(values) -> tuple[int, ...]:
    return tuple(int(values[ZIGZAG[k]]) for k in range(64))


def _scale_one(base: np.ndarray, qf: int) -> np.ndarray:
    # Integer division in the sub-50 branch matches the de-facto encoder,
    # whose tables real-world corpora carry.
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    return np.clip((base * scale + 50) // 100, 1, 255)


@lru_cache(maxsize=None)
def scale_tables(qf: int) -> QuantTables:
    """Tables the standard baseline encoder embeds at quality factor ``qf``."""
    if not isinstance(qf, int) or not 1 <= qf <= 100:
        raise DomainError(f"quality factor {qf!r} outside [1, 100]")
    return QuantTables(
        luma=tuple(int(v) for v in _scale_one(BASE_LUMA, qf)),
        chroma=tuple(int(v) for v in _scale_one(BASE_CHROMA, qf)),
    )


@lru_cache(maxsize=1)
def _candidate_stack() -> tuple[np.ndarray, np.ndarray]:
    luma = np.stack([_scale_one(BASE_LUMA, q) for q in range(1, 101)])
    chroma = np.stack([_scale_one(BASE_CHROMA, q) for q in range(1, 101)])
    return luma, chroma


def estimate_qf(tables: QuantTables) -> tuple[int, bool, int]:
    """Estimate the quality factor that produced ``tables``.

    Returns ``(qf, exact, distance)`` where ``distance`` is the summed
    absolute entry difference to the nearest standard-scaled table over
    luma plus chroma (chroma only when present). Ties break toward the
    larger quality factor.
    """
    cand_luma, cand_chroma = _candidate_stack()
    dist = np.abs(cand_luma - np.asarray(tables.luma, dtype=np.int64)).sum(axis=1)
    if tables.chroma is not None:
        dist = dist + np.abs(
            cand_chroma - np.asarray(tables.chroma, dtype=np.int64)
        ).sum(axis=1)
    # argmin with ties toward larger qf: scan reversed so the first (largest
    # qf) minimum wins.
    best_rev = int(np.argmin(dist[::-1]))
    qf = 100 - best_rev
    d = int(dist[qf - 1])
    return qf, d == 0, d
