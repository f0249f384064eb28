"""Compression and size bias measurement between the natural and
generated partitions of a scanned corpus.

The scalar bias measure is total-variation distance on normalized
counts: bounded, symmetric, and defined for disjoint supports, which is
the situation these corpora actually exhibit (naturals JPEG at many
quality factors, generated PNG at one size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from detbias.errors import EmptyDistribution, ShapeMismatch
from detbias.formats.meta import (
    FORMAT_JPEG,
    FORMAT_OTHER,
    FORMAT_PNG,
    GENERATED,
    NATURAL,
    ImageMeta,
)

QF_BINS = 101  # qf 1..100 plus the trailing non-JPEG/no-table bin
DEFAULT_BIN_WIDTH = 50
DEFAULT_MAX_EDGE = 1050


@dataclass(frozen=True)
class Histogram:
    """Counts over strictly increasing bin edges; len(edges) == bins+1."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    total: int

    def __post_init__(self):
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ShapeMismatch("bin_edges must have one more entry than counts")
        if any(self.bin_edges[i] >= self.bin_edges[i + 1]
               for i in range(len(self.bin_edges) - 1)):
            raise ShapeMismatch("bin_edges must strictly increase")
        if sum(self.counts) != self.total:
            raise ShapeMismatch("counts do not sum to total")


@dataclass(frozen=True)
class BiasReport:
    qf_hist_natural: Histogram
    qf_hist_generated: Histogram
    size_grid_natural: np.ndarray
    size_grid_generated: np.ndarray
    qf_divergence: float
    size_divergence: float
    format_table: dict


def qf_histogram(metas, origin: str) -> Histogram:
    """Quality-factor histogram over one origin.

    One bin per integer qf in [1, 100]; the last bin counts files with
    no quantization tables to estimate from (PNG and other formats).
    """
    counts = [0] * QF_BINS
    total = 0
    for m in metas:
        if m.origin != origin:
            continue
        total += 1
        if m.format == FORMAT_JPEG and m.qf is not None:
            counts[m.qf - 1] += 1
        else:
            counts[QF_BINS - 1] += 1
    return Histogram(
        bin_edges=tuple(float(v) for v in range(1, QF_BINS + 2)),
        counts=tuple(counts),
        total=total,
    )


def size_grid(metas, origin: str, bin_width: int = DEFAULT_BIN_WIDTH,
              max_edge: int = DEFAULT_MAX_EDGE) -> np.ndarray:
    """(width-bin, height-bin) count grid; the final row/column absorb
    everything at or beyond ``max_edge``."""
    nbins = max_edge // bin_width + 1
    grid = np.zeros((nbins, nbins), dtype=np.int64)
    for m in metas:
        if m.origin != origin:
            continue
        i = min(m.width // bin_width, nbins - 1)
        j = min(m.height // bin_width, nbins - 1)
        grid[i, j] += 1
    return grid


def _norm_counts(obj) -> np.ndarray:
    counts = np.asarray(obj.counts if isinstance(obj, Histogram) else obj,
                        dtype=np.float64).ravel()
    total = counts.sum()
    if total == 0:
        raise EmptyDistribution("cannot normalize an empty distribution")
    return counts / total


def divergence(h1, h2) -> float:
    """Total variation distance between two histograms or count grids."""
    if isinstance(h1, Histogram) != isinstance(h2, Histogram):
        raise ShapeMismatch("cannot compare a histogram with a grid")
    if isinstance(h1, Histogram):
        if h1.bin_edges != h2.bin_edges:
            raise ShapeMismatch("histograms have different binning")
    elif np.shape(h1) != np.shape(h2):
        raise ShapeMismatch("grids have different shapes")
    p1, p2 = _norm_counts(h1), _norm_counts(h2)
    return float(0.5 * np.abs(p1 - p2).sum())


def audit_corpus(metas) -> BiasReport:
    """Assemble the full bias report over a scanned corpus."""
    metas = list(metas)
    fmt = {
        origin: {FORMAT_JPEG: 0, FORMAT_PNG: 0, FORMAT_OTHER: 0}
        for origin in (NATURAL, GENERATED)
    }
    for m in metas:
        if m.origin in fmt:
            fmt[m.origin][m.format] += 1

    qn = qf_histogram(metas, NATURAL)
    qg = qf_histogram(metas, GENERATED)
    sn = size_grid(metas, NATURAL)
    sg = size_grid(metas, GENERATED)
    if qn.total == 0 or qg.total == 0:
        raise EmptyDistribution("both origins must be present")
    return BiasReport(
        qf_hist_natural=qn,
        qf_hist_generated=qg,
        size_grid_natural=sn,
        size_grid_generated=sg,
        qf_divergence=divergence(qn, qg),
        size_divergence=divergence(sn, sg),
        format_table=fmt,
    )


def report_to_json(report: BiasReport) -> dict:
    """JSON-ready dict; grids flattened row-major with their shape."""
    def hist(h: Histogram) -> dict:
        return {"bin_edges": list(h.bin_edges), "counts": list(h.counts),
                "total": h.total}

    def grid(g: np.ndarray) -> dict:
        return {"shape": list(g.shape), "counts": g.ravel().tolist()}

    return {
        "qf_hist_natural": hist(report.qf_hist_natural),
        "qf_hist_generated": hist(report.qf_hist_generated),
        "size_grid_natural": grid(report.size_grid_natural),
        "size_grid_generated": grid(report.size_grid_generated),
        "qf_divergence": report.qf_divergence,
        "size_divergence": report.size_divergence,
        "format_table": report.format_table,
    }


def hist_csv(h: Histogram) -> str:
    lines = ["bin_low,bin_high,count"]
    for i, c in enumerate(h.counts):
        lines.append(f"{h.bin_edges[i]:g},{h.bin_edges[i + 1]:g},{c}")
    return "\n".join(lines) + "\n"


def grid_csv(g: np.ndarray) -> str:
    return "\n".join(",".join(str(int(v)) for v in row) for row in g) + "\n"
