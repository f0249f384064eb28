"""Acceptance gate: ten headline criteria, one test (and one printed
verdict line) each.

Aggregate numbers asserted here are frozen from the published tables
they reproduce; everything else is property-checked on seeded synthetic
corpora at desk scale.
"""

import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import build_corpus, noise_raster, smooth_raster
from detbias.audit import audit_corpus, qf_histogram, divergence
from detbias.cli import main as cli_main
from detbias.debias import (ConstraintConfig, build_jpeg96_split,
                            build_size_split, materialize)
from detbias.evalharness import (CSV_HEADER, METRIC_ACC, METRIC_PREC,
                                 METRIC_REC, EvalMatrix, PredictionRecord,
                                 accuracy_matrix, diff_matrix, grand_average,
                                 robustness_curve)
from detbias.formats.jpeg import parse_jpeg_meta
from detbias.formats.meta import GENERATED, NATURAL
from detbias.formats.quant import estimate_qf, scale_tables
from detbias.formats.scan import PathLabeler, scan_corpus
from detbias.numfmt import fmt2
from detbias.probe import (eval_probe, extract_features, split_holdout,
                           train_probe)
from detbias.report import svg
from detbias.rng import SplitMix64
from detbias.transcode import (Raster, center_crop, encode_qf,
                               infer_preprocess, resize_bilinear,
                               train_preprocess, write_png)

MATERIALIZED_LABELER = PathLabeler(subset_component=None, origin_component=0,
                                   class_component=1)


def verdict(num, text):
    print(f"PASS criterion {num}: {text}")


def features_of(metas):
    return [extract_features(m) for m in metas]


def origins_of(metas):
    return [m.origin for m in metas]


# --------------------------------------------------------------- criteria

def test_criterion_01_qf_estimation_roundtrips_full_domain():
    start = time.perf_counter()
    for q in range(1, 101):
        assert estimate_qf(scale_tables(q)) == (q, True, 0)
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    verdict(1, f"all 100 quality factors round-trip exactly "
               f"in {elapsed:.3f}s")


def test_criterion_02_encoder_estimator_closure():
    start = time.perf_counter()
    rng = SplitMix64(2024)
    qualities = (60, 70, 80, 90, 95, 96, 100)
    for i in range(50):
        w = 16 + rng.below(64)
        h = 16 + rng.below(64)
        raster = (noise_raster(w, h, seed=i, channels=1) if i % 5 == 0
                  else smooth_raster(w, h, seed=i))
        for q in qualities:
            info = parse_jpeg_meta(encode_qf(raster, q))
            assert estimate_qf(info.tables) == (q, True, 0)
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    verdict(2, f"50 rasters x {len(qualities)} qualities closed "
               f"in {elapsed:.1f}s")


def test_criterion_03_compression_robustness_diffs():
    rows = [  # (constrained, unconstrained, expected diff)
        (67.17, 53.91, "13.26"),
        (59.37, 50.62, "8.75"),
        (55.07, 50.58, "4.49"),
    ]
    for ours, classic, want in rows:
        d = diff_matrix(EvalMatrix(("",), ("",), [[ours]], METRIC_ACC),
                        EvalMatrix(("",), ("",), [[classic]], METRIC_ACC))
        assert fmt2(d.values[0][0]) == want
        assert f"+{want}".encode() in svg.render_matrix(d)
    verdict(3, "matrix-average differences reproduce to 2 decimals")


def test_criterion_04_cross_generator_averages():
    resnet_classic = [("SD1.5", 72.16), ("SD1.4", 71.27), ("Wukong", 71.61)]
    resnet_ours = [("SD1.5", 83.90), ("SD1.4", 83.39), ("Wukong", 80.93)]
    swin_classic = [("SD1.5", 74.14), ("SD1.4", 74.93), ("Wukong", 73.20)]
    swin_ours = [("SD1.5", 85.90), ("SD1.4", 86.80), ("Wukong", 84.80)]

    a = grand_average(resnet_classic)
    b = grand_average(resnet_ours)
    assert fmt2(a) == "71.68"
    assert fmt2(b) == "82.74"
    assert fmt2(b - a) == "11.06"
    assert fmt2(grand_average(swin_classic)) == "74.09"
    assert fmt2(grand_average(swin_ours)) == "85.83"
    verdict(4, "per-detector totals and difference reproduce to 2 decimals")


def _biased_corpus(root: Path) -> Path:
    """n=4000 balanced: naturals JPEG qf 75..96 over mixed sizes where
    only the 512x512 files fall in the [450,550] window; generated PNG
    512x512."""
    classes = ["c0", "c1", "c2", "c3"]
    window_jpg = encode_qf(smooth_raster(512, 512, seed=1), 96)
    off_sizes = [(300, 600), (350, 700), (700, 350), (420, 380), (600, 300)]
    off_qfs = [75, 80, 85, 90, 92, 96]
    templates = {(w, h, q): encode_qf(smooth_raster(w, h, seed=q), q)
                 for (w, h) in off_sizes for q in off_qfs}
    png = write_png(smooth_raster(512, 512, seed=2))

    combos = list(itertools.product(off_sizes, off_qfs))
    n_off = 1500
    for i in range(500):
        cls = classes[i % 4]
        p = root / "train" / "nature" / cls / f"w{i}.jpg"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(window_jpg)
    for i in range(n_off):
        (w, h), q = combos[i % len(combos)]
        cls = classes[i % 4]
        p = root / "train" / "nature" / cls / f"o{i}.jpg"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(templates[(w, h, q)])
    for i in range(2000):
        cls = classes[i % 4]
        p = root / "train" / "sdv4" / cls / f"g{i}.png"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(png)
    return root


def test_criterion_05_bias_exploitability_gap(tmp_path):
    root = _biased_corpus(tmp_path / "corpus")
    start = time.perf_counter()

    scanned = scan_corpus(root, PathLabeler(), jobs=4)
    assert not scanned.failures and len(scanned.metas) == 4000
    train, held = split_holdout(scanned.metas, seed=77)
    model = train_probe(features_of(train), origins_of(train), seed=77)
    before = eval_probe(model, features_of(held), origins_of(held))
    assert before["accuracy"] >= 0.99

    cfg = ConstraintConfig(seed=77)
    manifest = build_size_split(scanned.metas, cfg)
    out = tmp_path / "split"
    report = materialize(manifest, out, source_root=root, jobs=4)
    assert not report.failures

    rescanned = scan_corpus(out, MATERIALIZED_LABELER, jobs=4)
    assert not rescanned.failures
    train2, held2 = split_holdout(rescanned.metas, seed=77)
    model2 = train_probe(features_of(train2), origins_of(train2), seed=77)
    after = eval_probe(model2, features_of(held2), origins_of(held2))
    assert after["accuracy"] <= 0.55

    elapsed = time.perf_counter() - start
    assert elapsed < 120.0
    verdict(5, f"probe accuracy {before['accuracy']:.3f} -> "
               f"{after['accuracy']:.3f} in {elapsed:.1f}s")


def test_criterion_06_debias_invariants(tmp_path):
    root = tmp_path / "corpus"
    for i in range(40):
        cls = f"c{i % 2}"
        qf = 96 if i % 2 == 0 else 75 + i % 20
        p = root / "train" / "nature" / cls / f"n{i}.jpg"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(encode_qf(smooth_raster(40 + i, 64, seed=i), qf))
    for i in range(40):
        cls = f"c{i % 2}"
        p = root / "train" / "sdv4" / cls / f"g{i}.png"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(write_png(noise_raster(48, 40, seed=100 + i)))

    scanned = scan_corpus(root, PathLabeler(), jobs=4)
    manifest = build_jpeg96_split(scanned.metas, ConstraintConfig(seed=5))
    out = tmp_path / "qf96"
    report = materialize(manifest, out, source_root=root, jobs=4)
    assert not report.failures

    rescanned = scan_corpus(out, MATERIALIZED_LABELER, jobs=4)
    assert not rescanned.failures
    audit = audit_corpus(rescanned.metas)
    assert audit.qf_divergence == 0.0
    for m in rescanned.metas:
        assert m.format == "JPEG" and (m.qf, m.qf_exact) == (96, True)
    by_class = {}
    for m in rescanned.metas:
        by_class.setdefault(m.class_label, {NATURAL: 0, GENERATED: 0})
        by_class[m.class_label][m.origin] += 1
    for counts in by_class.values():
        assert counts[NATURAL] == counts[GENERATED] > 0
    verdict(6, "materialized quality-matched split audits clean")


def test_criterion_06b_size_split_window(tmp_path):
    root = tmp_path / "corpus"
    sizes = [(512, 512), (470, 530), (300, 512), (512, 600), (460, 460)]
    for i in range(30):
        w, h = sizes[i % len(sizes)]
        p = root / "train" / "nature" / "c0" / f"n{i}.jpg"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(encode_qf(smooth_raster(w, h, seed=i), 96))
    for i in range(10):
        p = root / "train" / "sdv4" / "c0" / f"g{i}.png"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(write_png(smooth_raster(512, 512, seed=50 + i)))

    scanned = scan_corpus(root, PathLabeler(), jobs=4)
    manifest = build_size_split(scanned.metas, ConstraintConfig(seed=5))
    by_path = {m.path: m for m in scanned.metas}
    naturals = [e for e in manifest.entries if e.origin == NATURAL]
    assert naturals
    for e in naturals:
        m = by_path[e.source_path]
        assert 450 <= m.width <= 550 and 450 <= m.height <= 550
    verdict(6, "size split keeps every natural side inside [450,550]")


def _naive_matrix(records, metric, threshold=0.5):
    cells = {}
    for r in records:
        cells.setdefault((r.train_subset, r.eval_subset), []).append(r)
    out = {}
    for key, rs in cells.items():
        tp = fp = tn = fn = 0
        for r in rs:
            positive = r.score >= threshold
            if r.true_label == GENERATED:
                tp, fn = tp + int(positive), fn + int(not positive)
            else:
                fp, tn = fp + int(positive), tn + int(not positive)
        # percent of a count fraction, the metric's literal definition
        if metric == METRIC_ACC:
            v = 100.0 * ((tp + tn) / (tp + tn + fp + fn))
        elif metric == METRIC_PREC:
            v = None if tp + fp == 0 else 100.0 * (tp / (tp + fp))
        else:
            v = None if tp + fn == 0 else 100.0 * (tp / (tp + fn))
        out[key] = v
    return out


def test_criterion_07_matrix_oracle_equivalence():
    pool = ["biggan", "adm", "glide", "sdv4", "sdv5", "wukong",
            "midjourney", "unknown_gen"]
    rng = SplitMix64(404)
    for trial in range(20):
        rows = [pool[rng.below(len(pool))] for _ in range(2 + rng.below(3))]
        cols = [pool[rng.below(len(pool))] for _ in range(2 + rng.below(3))]
        records = []
        i = 0
        while len(records) < 500:
            done_min = i >= len(rows) * len(cols)
            tr = rows[i % len(rows)] if not done_min else rows[rng.below(len(rows))]
            ev = cols[i // len(rows) % len(cols)] if not done_min else \
                cols[rng.below(len(cols))]
            records.append(PredictionRecord(
                path=f"p{i}", true_label=GENERATED if rng.below(2) else NATURAL,
                score=rng.below(101) / 100.0, train_subset=tr, eval_subset=ev,
                condition="raw"))
            i += 1
            if done_min and rng.below(4) == 0:
                break
        for metric in (METRIC_ACC, METRIC_PREC, METRIC_REC):
            matrix = accuracy_matrix(records, metric)
            naive = _naive_matrix(records, metric)
            for ri, rname in enumerate(matrix.row_names):
                for ci, cname in enumerate(matrix.col_names):
                    assert matrix.values[ri][ci] == naive[(rname, cname)]
    verdict(7, "20 random prediction sets match the naive recount exactly")


def test_criterion_08_preprocessing_equivalence():
    r = smooth_raster(512, 512, seed=888)
    a, b = train_preprocess(r), infer_preprocess(r)
    assert np.array_equal(a.samples, b.samples)
    assert (a.width, a.height) == (224, 224)

    assert center_crop(smooth_raster(512, 512, seed=1), 450).width == 450
    src = Raster.from_array(np.arange(20, dtype=np.uint8).reshape(4, 5, 1))
    cropped = center_crop(src, 2)
    assert np.array_equal(cropped.samples[..., 0],
                          src.samples[1:3, 1:3, 0])  # offsets (1, 1)

    two = Raster.from_array(np.array([[0, 255]], np.uint8))
    assert resize_bilinear(two, 4, 1).samples[0, :, 0].tolist() == \
        [0, 64, 191, 255]
    verdict(8, "train and inference preprocessing agree at 512; goldens hold")


def _pipeline_once(corpus: Path, workdir: Path, seed: int) -> Path:
    workdir.mkdir(parents=True, exist_ok=True)
    out = workdir / "out"
    cfg = workdir / "run.ini"
    cfg.write_text(
        "[corpus]\n"
        f"root = {corpus}\n"
        "natural_names = nature\n"
        "\n[run]\n"
        f"seed = {seed}\n"
        f"out = {out}\n"
        "jobs = 2\n", encoding="utf-8")
    c = str(cfg)
    assert cli_main(["scan", "--config", c]) == 0
    assert cli_main(["audit", "--config", c]) == 0
    assert cli_main(["debias", "--mode", "jpeg96", "--config", c]) == 0
    assert cli_main(["debias", "--mode", "size", "--config", c,
                     "--out", str(out / "debias")]) == 0
    assert cli_main(["materialize", "--config", c, "--manifest",
                     str(out / "debias" / "manifest_jpeg96.jsonl")]) == 0
    assert cli_main(["probe", "--config", c]) == 0

    with open(out / "scan" / "metas.jsonl", encoding="utf-8") as fp:
        lines = [json.loads(ln) for ln in fp]
    preds = workdir / "preds.csv"
    rows = [",".join(CSV_HEADER)]
    for cond in ("raw", "jpeg80"):
        for rec in lines:
            score = "0.8" if rec["origin"] == GENERATED else "0.2"
            rows.append(f"{rec['path']},{rec['origin']},{score},sdv4,sdv4,{cond}")
    preds.write_text("\n".join(rows) + "\n", encoding="utf-8")
    assert cli_main(["eval", "--predictions", str(preds),
                     "--out", str(out / "eval")]) == 0
    assert cli_main(["report", "--predictions", str(preds),
                     "--metas", str(out / "scan" / "metas.jsonl"),
                     "--native-side", "512",
                     "--out", str(out / "report")]) == 0
    return out


def test_criterion_09_pipeline_determinism(tmp_path):
    corpus = build_corpus(tmp_path / "corpus", n_nat=8, n_gen=8)
    out_a = _pipeline_once(corpus, tmp_path / "a", seed=31)
    out_b = _pipeline_once(corpus, tmp_path / "b", seed=31)

    compared = 0
    for pa in sorted(out_a.rglob("*")):
        if pa.is_dir() or pa.name == "run.json" or pa.suffix == ".png":
            continue
        if pa.suffix not in (".jsonl", ".json", ".csv", ".svg"):
            continue
        pb = out_b / pa.relative_to(out_a)
        assert pb.is_file(), f"missing twin for {pa}"
        assert pa.read_bytes() == pb.read_bytes(), f"differs: {pa}"
        compared += 1
    assert compared >= 15
    verdict(9, f"{compared} pipeline artifacts byte-identical across runs")


def test_criterion_10_compression_shifts_generated_to_natural():
    records = []
    conditions = (("raw", [0.9, 0.8, 0.7, 0.9]),
                  ("jpeg90", [0.9, 0.8, 0.4, 0.3]),
                  ("jpeg60", [0.4, 0.3, 0.2, 0.1]))
    for cond, gen_scores in conditions:
        for i, s in enumerate(gen_scores):
            records.append(PredictionRecord(f"g{i}", GENERATED, s,
                                            "sdv4", "sdv4", cond))
        for i in range(4):
            records.append(PredictionRecord(f"n{i}", NATURAL, 0.2,
                                            "sdv4", "sdv4", cond))

    by_cond = {}
    for r in records:
        by_cond.setdefault(r.condition, []).append(r)
    for cond, rs in by_cond.items():
        prec = accuracy_matrix(rs, METRIC_PREC)
        populated = [v for row in prec.values for v in row if v is not None]
        assert all(v == 100.0 for v in populated)

    recall = robustness_curve(records, metric=METRIC_REC)
    assert [c for c, _ in recall] == ["raw", "jpeg90", "jpeg60"]
    values = [v for _, v in recall]
    assert values == [100.0, 50.0, 0.0]
    assert all(a > b for a, b in zip(values, values[1:]))
    verdict(10, "precision stays 100 over populated cells while recall "
                "falls with severity")
