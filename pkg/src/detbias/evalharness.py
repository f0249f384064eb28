"""Evaluation harness over external detector predictions: cross-subset
matrices, averages and differences, per-condition robustness series, and
the size-interval accuracy grid.

Predictions arrive as CSV; nothing here runs a detector. The positive
class is GENERATED and the decision threshold is 0.5 unless overridden.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from detbias.errors import (
    EmptyEval,
    JoinError,
    MissingCell,
    ParseError,
    ShapeMismatch,
)
from detbias.formats.meta import GENERATED, NATURAL
from detbias.numfmt import fmt2

CSV_HEADER = ["path", "true_label", "score",
              "train_subset", "eval_subset", "condition"]

# the known generators' native output sides; rows/columns order by
# (side, name), unknown names sort after the known ones
GENERATOR_SIZES = {
    "biggan": 128,
    "adm": 256,
    "glide": 256,
    "vqdm": 256,
    "sdv4": 512,
    "sdv5": 512,
    "wukong": 512,
    "midjourney": 1024,
}

METRIC_ACC = "acc"
METRIC_PREC = "prec"
METRIC_REC = "rec"
METRIC_DIFF = "diff"


@dataclass(frozen=True)
class PredictionRecord:
    path: str
    true_label: str
    score: float
    train_subset: str
    eval_subset: str
    condition: str


@dataclass
class EvalMatrix:
    row_names: tuple[str, ...]
    col_names: tuple[str, ...]
    values: list  # rows of float-or-None (None: undefined metric)
    metric: str


@dataclass
class SizeGrid:
    """Per-(width-bin, height-bin) accuracy over natural records; None
    cells had no data; ``marker`` is the generated-native cell."""

    values: list
    bin_width: int
    marker: tuple[int, int] | None = None


def subset_order(names) -> tuple[str, ...]:
    return tuple(sorted(set(names),
                        key=lambda n: (GENERATOR_SIZES.get(n, 1 << 30), n)))


def condition_order(conditions) -> tuple[str, ...]:
    def key(c: str):
        lc = c.lower()
        if lc in ("raw", "png", "uncompressed"):
            return (0, 0, c)
        if lc.startswith("jpeg") and lc[4:].isdigit():
            return (1, -int(lc[4:]), c)
        return (2, 0, c)
    return tuple(sorted(set(conditions), key=key))


# ---------------------------------------------------------------- loading

def load_predictions(source) -> tuple[list[PredictionRecord], list[tuple[int, str]]]:
    """Parse a prediction CSV.

    ``source`` is a path or text file object. Returns (records, errors)
    where errors hold (line_number, message) for malformed rows; a bad
    header is fatal.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fp:
            text = fp.read()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty prediction file") from None
    if header != CSV_HEADER:
        raise ParseError(
            f"bad header {header!r}, expected {CSV_HEADER!r}")

    records: list[PredictionRecord] = []
    errors: list[tuple[int, str]] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            errors.append((lineno, f"expected {len(CSV_HEADER)} fields, got {len(row)}"))
            continue
        path, label, score_s, train, ev, cond = row
        if label not in (NATURAL, GENERATED):
            errors.append((lineno, f"bad true_label {label!r}"))
            continue
        try:
            score = float(score_s)
        except ValueError:
            errors.append((lineno, f"bad score {score_s!r}"))
            continue
        if not 0.0 <= score <= 1.0:
            errors.append((lineno, f"score {score} outside [0, 1]"))
            continue
        if not (path and train and ev and cond):
            errors.append((lineno, "empty path, subset, or condition field"))
            continue
        records.append(PredictionRecord(path, label, score, train, ev, cond))
    return records, errors


# ---------------------------------------------------------------- metrics

def confusion(records, threshold: float = 0.5) -> dict:
    """Counts with GENERATED positive; score >= threshold predicts
    GENERATED."""
    records = list(records)
    if not records:
        raise EmptyEval("no records to evaluate")
    tp = fp = tn = fn = 0
    for r in records:
        predicted_generated = r.score >= threshold
        if r.true_label == GENERATED:
            if predicted_generated:
                tp += 1
            else:
                fn += 1
        else:
            if predicted_generated:
                fp += 1
            else:
                tn += 1
    return {"tp": tp, "fp": fp, "tn": tn, "fn": fn}


def _metric_value(c: dict, metric: str):
    n = c["tp"] + c["fp"] + c["tn"] + c["fn"]
    if metric == METRIC_ACC:
        return (c["tp"] + c["tn"]) / n
    if metric == METRIC_PREC:
        denom = c["tp"] + c["fp"]
        return c["tp"] / denom if denom else None
    if metric == METRIC_REC:
        denom = c["tp"] + c["fn"]
        return c["tp"] / denom if denom else None
    raise ValueError(f"unknown metric {metric!r}")


def accuracy_matrix(records, metric: str = METRIC_ACC,
                    threshold: float = 0.5) -> EvalMatrix:
    """Per-(train_subset, eval_subset) metric over one condition's
    records, as percentages."""
    records = list(records)
    if not records:
        raise EmptyEval("no records to evaluate")
    cells: dict = {}
    for r in records:
        cells.setdefault((r.train_subset, r.eval_subset), []).append(r)
    rows = subset_order(r.train_subset for r in records)
    cols = subset_order(r.eval_subset for r in records)
    missing = [(tr, ev) for tr in rows for ev in cols if (tr, ev) not in cells]
    if missing:
        raise MissingCell(missing)
    values = []
    for tr in rows:
        out_row = []
        for ev in cols:
            v = _metric_value(confusion(cells[(tr, ev)], threshold), metric)
            out_row.append(None if v is None else 100.0 * v)
        values.append(out_row)
    return EvalMatrix(row_names=rows, col_names=cols, values=values,
                      metric=metric)


def diff_matrix(a: EvalMatrix, b: EvalMatrix) -> EvalMatrix:
    if a.row_names != b.row_names or a.col_names != b.col_names:
        raise ShapeMismatch("matrices cover different subsets")
    values = []
    for ra, rb in zip(a.values, b.values):
        values.append([None if va is None or vb is None else va - vb
                       for va, vb in zip(ra, rb)])
    return EvalMatrix(row_names=a.row_names, col_names=a.col_names,
                      values=values, metric=METRIC_DIFF)


def row_average(m: EvalMatrix) -> list[tuple[str, float]]:
    """Arithmetic mean of the defined cells of each row."""
    out = []
    for name, row in zip(m.row_names, m.values):
        vals = [v for v in row if v is not None]
        if not vals:
            raise EmptyEval(f"row {name!r} has no defined cells")
        out.append((name, sum(vals) / len(vals)))
    return out


def grand_average(rows) -> float:
    """Unweighted mean of row averages; accepts a matrix or the output
    of row_average."""
    if isinstance(rows, EvalMatrix):
        rows = row_average(rows)
    pairs = list(rows)
    if not pairs:
        raise EmptyEval("no rows to average")
    vals = [v for _, v in pairs] if isinstance(pairs[0], tuple) else pairs
    return sum(vals) / len(vals)


def robustness_curve(records, threshold: float = 0.5,
                     metric: str = METRIC_ACC) -> list[tuple[str, float]]:
    """Grand-average metric per condition, ordered raw/png first, then
    by decreasing quality factor."""
    records = list(records)
    if not records:
        raise EmptyEval("no records to evaluate")
    by_cond: dict = {}
    for r in records:
        by_cond.setdefault(r.condition, []).append(r)
    out = []
    for cond in condition_order(by_cond):
        m = accuracy_matrix(by_cond[cond], metric, threshold)
        out.append((cond, grand_average(m)))
    return out


def size_interval_accuracy(records, metas, bin_width: int = 50,
                           max_edge: int = 1050, native_side: int | None = None,
                           threshold: float = 0.5) -> SizeGrid:
    """Accuracy over NATURAL records per (width, height) bin.

    ``metas`` supplies dimensions, joined by path. The marker cell is
    the generated-native size interval when ``native_side`` is given.
    """
    by_path = {m.path: m for m in metas}
    records = [r for r in records if r.true_label == NATURAL]
    unresolved = sorted({r.path for r in records if r.path not in by_path})
    if unresolved:
        raise JoinError(unresolved)

    nbins = max_edge // bin_width + 1
    cells: dict = {}
    for r in records:
        m = by_path[r.path]
        i = min(m.width // bin_width, nbins - 1)
        j = min(m.height // bin_width, nbins - 1)
        cells.setdefault((i, j), []).append(r)
    values = [[None] * nbins for _ in range(nbins)]
    for (i, j), rs in cells.items():
        c = confusion(rs, threshold)
        values[i][j] = 100.0 * (c["tp"] + c["tn"]) / sum(c.values())
    marker = None
    if native_side is not None:
        k = min(native_side // bin_width, nbins - 1)
        marker = (k, k)
    return SizeGrid(values=values, bin_width=bin_width, marker=marker)


# ---------------------------------------------------------------- emission

def _matrix_csv(m: EvalMatrix) -> str:
    def cell(v):
        return "" if v is None else fmt2(v)

    lines = []
    labeled = any(m.row_names) or any(m.col_names)
    if labeled:
        lines.append(",".join([""] + list(m.col_names)))
    for name, row in zip(m.row_names, m.values):
        cells = [cell(v) for v in row]
        lines.append(",".join(([name] if labeled else []) + cells))
    return "\n".join(lines) + "\n"


def _grid_csv(g: SizeGrid) -> str:
    lines = []
    for row in g.values:
        lines.append(",".join("" if v is None else fmt2(v) for v in row))
    return "\n".join(lines) + "\n"


def _curve_csv(points) -> str:
    lines = ["condition,value"]
    for label, v in points:
        lines.append(f"{label},{fmt2(v)}")
    return "\n".join(lines) + "\n"


def emit_report(obj, format: str = "csv") -> bytes:
    """Serialize a matrix, size grid, or condition curve.

    CSV carries values to exactly 2 decimals (half-up); SVG output is an
    annotated heatmap or line chart with deterministic bytes.
    """
    from detbias.report import svg  # local import keeps modules acyclic

    fmt = format.lower()
    if fmt not in ("csv", "svg"):
        raise ValueError(f"unknown report format {format!r}")
    if isinstance(obj, EvalMatrix):
        return (_matrix_csv(obj).encode("utf-8") if fmt == "csv"
                else svg.render_matrix(obj))
    if isinstance(obj, SizeGrid):
        return (_grid_csv(obj).encode("utf-8") if fmt == "csv"
                else svg.render_grid(obj))
    # a curve: iterable of (label, value)
    points = list(obj)
    return (_curve_csv(points).encode("utf-8") if fmt == "csv"
            else svg.render_curve(points))
