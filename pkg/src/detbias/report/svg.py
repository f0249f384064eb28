"""Hand-assembled SVG charts: annotated heatmaps and a line chart.

Rendering is pure string assembly from the input values, so identical
input yields byte-identical output; that determinism is part of the
pipeline contract, which is why these are not drawn with a plotting
library. Objects are duck-typed: anything with ``values``/``row_names``/
``col_names``/``metric`` renders as a matrix, anything with ``values``/
``marker`` as a grid.
"""

from __future__ import annotations

from detbias.numfmt import fmt2

CELL_W = 66
CELL_H = 30
LABEL_W = 96
LABEL_H = 36
FONT = "monospace"

# sequential ramp endpoints (light to dark blue) and the diverging
# midpoint used for difference matrices
_LOW = (247, 251, 255)
_HIGH = (8, 48, 107)
_NEG = (103, 0, 31)


def _lerp(a, b, t: float):
    return tuple(round(a[i] + (b[i] - a[i]) * t) for i in range(3))


def _fill(value, metric: str) -> tuple[str, str]:
    """(cell fill, text color) for a metric value."""
    if metric == "diff":
        t = max(-100.0, min(100.0, value)) / 100.0
        rgb = _lerp(_LOW, _HIGH, t) if t >= 0 else _lerp(_LOW, _NEG, -t)
        dark = abs(t) > 0.55
    else:
        t = max(0.0, min(100.0, value)) / 100.0
        rgb = _lerp(_LOW, _HIGH, t)
        dark = t > 0.55
    return "#%02x%02x%02x" % rgb, "#ffffff" if dark else "#000000"


def _esc(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def _cross(x: int, y: int, w: int, h: int, color: str, width: int,
           style: str) -> list[str]:
    # one <g> per cross so consumers can count glyphs by class
    pad = 6
    return [
        f'<g class="{style}">',
        f'<line x1="{x + pad}" y1="{y + pad}" x2="{x + w - pad}" '
        f'y2="{y + h - pad}" stroke="{color}" stroke-width="{width}"/>',
        f'<line x1="{x + pad}" y1="{y + h - pad}" x2="{x + w - pad}" '
        f'y2="{y + pad}" stroke="{color}" stroke-width="{width}"/>',
        "</g>",
    ]


def _open_svg(width: int, height: int) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]


def render_matrix(m) -> bytes:
    """Annotated heatmap of an evaluation matrix."""
    rows, cols = list(m.row_names), list(m.col_names)
    has_labels = any(rows) or any(cols)
    x0 = LABEL_W if has_labels else 0
    y0 = LABEL_H if has_labels else 0
    width = x0 + CELL_W * len(cols)
    height = y0 + CELL_H * len(rows)
    parts = _open_svg(width, height)

    if has_labels:
        for j, name in enumerate(cols):
            parts.append(
                f'<text x="{x0 + j * CELL_W + CELL_W // 2}" y="{LABEL_H - 10}" '
                f'font-family="{FONT}" font-size="11" text-anchor="middle">'
                f"{_esc(name)}</text>")
        for i, name in enumerate(rows):
            parts.append(
                f'<text x="{LABEL_W - 8}" y="{y0 + i * CELL_H + CELL_H // 2 + 4}" '
                f'font-family="{FONT}" font-size="11" text-anchor="end">'
                f"{_esc(name)}</text>")

    for i in range(len(rows)):
        for j in range(len(cols)):
            x, y = x0 + j * CELL_W, y0 + i * CELL_H
            v = m.values[i][j]
            if v is None:
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                    f'fill="#ffffff" stroke="#888888"/>')
                parts += _cross(x, y, CELL_W, CELL_H, "#000000", 2, "cross-nodata")
                continue
            fill, textcol = _fill(v, m.metric)
            text = fmt2(v)
            if m.metric == "diff" and v >= 0:
                text = "+" + text
            parts.append(
                f'<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" '
                f'fill="{fill}" stroke="#888888"/>')
            parts.append(
                f'<text x="{x + CELL_W // 2}" y="{y + CELL_H // 2 + 4}" '
                f'font-family="{FONT}" font-size="11" text-anchor="middle" '
                f'fill="{textcol}">{text}</text>')
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def render_grid(g) -> bytes:
    """Size-interval heatmap: columns are width bins, rows are height
    bins (origin bottom-left would need flips; kept top-left for a plain
    data view). No-data cells carry a black cross, the generated-native
    cell a red one."""
    n = len(g.values)
    cell = 34
    width = LABEL_W + cell * n
    height = LABEL_H + cell * n
    parts = _open_svg(width, height)
    bw = g.bin_width
    for k in range(n):
        parts.append(
            f'<text x="{LABEL_W + k * cell + cell // 2}" y="{LABEL_H - 10}" '
            f'font-family="{FONT}" font-size="9" text-anchor="middle">'
            f"{k * bw}</text>")
        parts.append(
            f'<text x="{LABEL_W - 8}" y="{LABEL_H + k * cell + cell // 2 + 3}" '
            f'font-family="{FONT}" font-size="9" text-anchor="end">'
            f"{k * bw}</text>")
    for i in range(n):          # width bin -> column
        for j in range(n):      # height bin -> row
            x, y = LABEL_W + i * cell, LABEL_H + j * cell
            v = g.values[i][j]
            if v is None:
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="#ffffff" stroke="#cccccc"/>')
                parts += _cross(x, y, cell, cell, "#000000", 1, "cross-nodata")
            else:
                fill, textcol = _fill(v, "acc")
                parts.append(
                    f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                    f'fill="{fill}" stroke="#cccccc"/>')
                parts.append(
                    f'<text x="{x + cell // 2}" y="{y + cell // 2 + 3}" '
                    f'font-family="{FONT}" font-size="7" text-anchor="middle" '
                    f'fill="{textcol}">{fmt2(v)}</text>')
    if g.marker is not None:
        i, j = g.marker
        parts += _cross(LABEL_W + i * cell, LABEL_H + j * cell,
                        cell, cell, "#cc0000", 3, "cross-marker")
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


def render_curve(points) -> bytes:
    """Line chart of (label, value) pairs, values on a 0..100 axis."""
    points = list(points)
    n = max(len(points), 1)
    plot_w, plot_h = max(80 * n, 240), 220
    x0, y0 = 60, 20
    width, height = x0 + plot_w + 20, y0 + plot_h + LABEL_H
    parts = _open_svg(width, height)

    def sx(k: int) -> int:
        return x0 + (plot_w // (2 * n)) + k * (plot_w // n)

    def sy(v: float) -> float:
        return y0 + plot_h - (max(0.0, min(100.0, v)) / 100.0) * plot_h

    for tick in (0, 25, 50, 75, 100):
        y = sy(tick)
        parts.append(f'<line x1="{x0}" y1="{y:.1f}" x2="{x0 + plot_w}" '
                     f'y2="{y:.1f}" stroke="#dddddd"/>')
        parts.append(f'<text x="{x0 - 8}" y="{y + 4:.1f}" font-family="{FONT}" '
                     f'font-size="10" text-anchor="end">{tick}</text>')
    coords = [(sx(k), sy(v)) for k, (_, v) in enumerate(points)]
    if len(coords) > 1:
        path = " ".join(f"{x},{y:.1f}" for x, y in coords)
        parts.append(f'<polyline points="{path}" fill="none" '
                     f'stroke="#1f5fa8" stroke-width="2"/>')
    for (x, y), (label, v) in zip(coords, points):
        parts.append(f'<circle cx="{x}" cy="{y:.1f}" r="3" fill="#1f5fa8"/>')
        parts.append(f'<text x="{x}" y="{y - 8:.1f}" font-family="{FONT}" '
                     f'font-size="10" text-anchor="middle">{fmt2(v)}</text>')
        parts.append(f'<text x="{x}" y="{y0 + plot_h + 16}" '
                     f'font-family="{FONT}" font-size="10" '
                     f'text-anchor="middle">{_esc(label)}</text>')
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")
