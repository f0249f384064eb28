"""Presentation figures rendered with matplotlib, written next to the
delimited output by the report command.

PNG bytes are not covered by the determinism contract (matplotlib embeds
library internals); the CSV/SVG artifacts are the canonical outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from detbias.numfmt import fmt2


def save_matrix_png(m, path) -> None:
    rows, cols = list(m.row_names), list(m.col_names)
    data = np.array([[np.nan if v is None else v for v in row]
                     for row in m.values], dtype=float)
    fig, ax = plt.subplots(
        figsize=(1.2 + 0.9 * len(cols), 1.0 + 0.55 * len(rows)))
    if m.metric == "diff":
        im = ax.imshow(data, cmap="RdBu", vmin=-100, vmax=100)
    else:
        im = ax.imshow(data, cmap="Blues", vmin=0, vmax=100)
    ax.set_xticks(range(len(cols)), cols, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(rows)), rows, fontsize=8)
    for i in range(len(rows)):
        for j in range(len(cols)):
            v = m.values[i][j]
            if v is None:
                ax.text(j, i, "x", ha="center", va="center", fontsize=8)
                continue
            scale = 100.0 if m.metric != "diff" else 55.0
            color = "white" if abs(v) > 0.55 * scale else "black"
            ax.text(j, i, fmt2(v), ha="center", va="center",
                    fontsize=7, color=color)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_grid_png(g, path) -> None:
    n = len(g.values)
    data = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(n):
            if g.values[i][j] is not None:
                data[j, i] = g.values[i][j]  # width on x, height on y
    fig, ax = plt.subplots(figsize=(7, 6))
    im = ax.imshow(data, cmap="Blues", vmin=0, vmax=100, origin="lower")
    for i in range(n):
        for j in range(n):
            if g.values[i][j] is None:
                ax.plot(i, j, marker="x", color="black", markersize=3,
                        linestyle="none")
    if g.marker is not None:
        ax.plot(g.marker[0], g.marker[1], marker="x", color="red",
                markersize=10, markeredgewidth=3, linestyle="none")
    ticks = range(0, n, max(1, n // 8))
    ax.set_xticks(list(ticks), [str(k * g.bin_width) for k in ticks], fontsize=7)
    ax.set_yticks(list(ticks), [str(k * g.bin_width) for k in ticks], fontsize=7)
    ax.set_xlabel("width")
    ax.set_ylabel("height")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curve_png(points, path) -> None:
    points = list(points)
    labels = [p[0] for p in points]
    values = [p[1] for p in points]
    fig, ax = plt.subplots(figsize=(1.5 + 0.9 * len(points), 3.5))
    ax.plot(range(len(points)), values, marker="o")
    for k, v in enumerate(values):
        ax.annotate(fmt2(v), (k, v), textcoords="offset points",
                    xytext=(0, 6), ha="center", fontsize=8)
    ax.set_xticks(range(len(points)), labels, rotation=45, ha="right",
                  fontsize=8)
    ax.set_ylim(0, 105)
    ax.grid(axis="y", alpha=0.4)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
