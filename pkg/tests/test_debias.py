"""Split manifests: filtering, balancing, sampling, serialization, and
file materialization."""

import io

import pytest

from conftest import mk_meta, noise_raster, smooth_raster
from detbias.debias import (ACTION_COPY, ACTION_ENCODE, ConstraintConfig,
                            build_jpeg96_split, build_size_split,
                            manifest_to_lines, materialize, read_manifest,
                            write_manifest)
from detbias.errors import (ConstraintViolation, InsufficientData, ParseError)
from detbias.formats.meta import GENERATED, NATURAL
from detbias.formats.scan import parse_image_bytes
from detbias.transcode import encode_qf, write_png

CFG = ConstraintConfig(seed=21)


def nat(i, qf=96, exact=True, cls="c0", w=512, h=512, subset="train"):
    return mk_meta(f"{subset}/nature/{cls}/n{i}.jpg", NATURAL, qf=qf,
                   qf_exact=exact, class_label=cls, width=w, height=h,
                   subset=subset)


def gen(i, cls="c0", w=512, h=512, fmt="PNG", subset="train"):
    ext = "png" if fmt == "PNG" else "jpg"
    return mk_meta(f"{subset}/sdv4/{cls}/g{i}.{ext}", GENERATED, fmt=fmt,
                   class_label=cls, width=w, height=h, subset=subset)


# ------------------------------------------------------------- jpeg96 split

def test_jpeg96_filter_and_match_counts():
    metas = ([nat(i, qf=96) for i in range(40)]
             + [nat(100 + i, qf=85) for i in range(60)]
             + [gen(i) for i in range(200)])
    m = build_jpeg96_split(metas, CFG)
    nats = [e for e in m.entries if e.origin == NATURAL]
    gens = [e for e in m.entries if e.origin == GENERATED]
    assert len(nats) == 40 and len(gens) == 40
    assert all(e.action == ACTION_COPY for e in nats)
    assert all(e.action == ACTION_ENCODE and e.qf == 96 for e in gens)


def test_jpeg96_requires_exact_tables():
    metas = [nat(0, qf=96, exact=False), nat(1, qf=96), gen(0), gen(1)]
    m = build_jpeg96_split(metas, CFG)
    assert [e.source_path for e in m.entries if e.origin == NATURAL] == [
        nat(1).path]


def test_manifest_deterministic_and_sorted():
    metas = ([nat(i, cls=f"c{i % 3}") for i in range(9)]
             + [gen(i, cls=f"c{i % 3}") for i in range(30)])
    a = list(manifest_to_lines(build_jpeg96_split(metas, CFG)))
    b = list(manifest_to_lines(build_jpeg96_split(metas, CFG)))
    assert a == b
    m = build_jpeg96_split(metas, CFG)
    keys = [(e.class_label, e.origin, e.source_path) for e in m.entries]
    assert keys == sorted(keys)
    other = build_jpeg96_split(metas, ConstraintConfig(seed=22))
    assert list(manifest_to_lines(other)) != a


def test_per_class_min_selection():
    metas = ([nat(i, cls="a") for i in range(5)]
             + [nat(10 + i, cls="b") for i in range(3)]
             + [gen(i, cls="a") for i in range(4)]
             + [gen(10 + i, cls="b") for i in range(6)])
    m = build_jpeg96_split(metas, CFG)
    assert m.counts["a"] == {NATURAL: 4, GENERATED: 4}
    assert m.counts["b"] == {NATURAL: 3, GENERATED: 3}


def test_global_pool_when_balance_off():
    metas = ([nat(i, cls="a") for i in range(5)]
             + [gen(i, cls="b") for i in range(3)])
    cfg = ConstraintConfig(seed=1, per_class_balance=False)
    m = build_jpeg96_split(metas, cfg)
    assert len([e for e in m.entries if e.origin == NATURAL]) == 3
    assert len([e for e in m.entries if e.origin == GENERATED]) == 3


def test_insufficient_data_cases():
    with pytest.raises(InsufficientData):
        build_jpeg96_split([gen(0)], CFG)
    with pytest.raises(InsufficientData):
        build_jpeg96_split([nat(0, qf=80), gen(0)], CFG)  # no qf96 naturals
    with pytest.raises(InsufficientData):
        # no class overlap under per-class balance
        build_jpeg96_split([nat(0, cls="a"), gen(0, cls="b")], CFG)


# --------------------------------------------------------------- size split

def test_size_split_filters_and_constraint():
    metas = ([nat(0, w=512, h=512), nat(1, w=449, h=512),
              nat(2, w=512, h=551), nat(3, w=450, h=550),
              nat(4, qf=85, w=512, h=512)]
             + [gen(i) for i in range(4)])
    m = build_size_split(metas, CFG)
    kept = [e.source_path for e in m.entries if e.origin == NATURAL]
    assert kept == [nat(0).path, nat(3).path]


def test_size_split_rejects_off_interval_generator():
    metas = [nat(0), gen(0, w=256, h=256), gen(1, w=256, h=256)]
    with pytest.raises(ConstraintViolation):
        build_size_split(metas, CFG)


def test_size_split_explicit_native_side_overrides_modal():
    metas = [nat(0), gen(0, w=256, h=256)]
    cfg = ConstraintConfig(seed=21, generator_native_side=512)
    # modal would be 256 and violate; explicit 512 passes the gate
    m = build_size_split(metas, cfg)
    assert len(m.entries) == 2


def test_size_split_dedups_naturals_by_source_path():
    dup = mk_meta("shared/nature/c0/n0.jpg", NATURAL, qf=96, qf_exact=True,
                  class_label="c0", subset="val")
    base = mk_meta("shared/nature/c0/n0.jpg", NATURAL, qf=96, qf_exact=True,
                   class_label="c0", subset="train")
    m = build_size_split([base, dup, gen(0), gen(1)], CFG)
    assert len([e for e in m.entries if e.origin == NATURAL]) == 1


# ---------------------------------------------------------------- serialize

def test_manifest_roundtrip(tmp_path):
    metas = [nat(i) for i in range(3)] + [gen(i) for i in range(3)]
    m = build_jpeg96_split(metas, CFG)
    p = tmp_path / "m.jsonl"
    write_manifest(m, p)
    back = read_manifest(p)
    assert back.entries == m.entries
    assert back.counts == m.counts
    assert back.seed == m.seed


def test_read_manifest_rejects_garbage(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ParseError):
        read_manifest(p)


def test_output_paths_disambiguate_same_stem():
    metas = [nat(0, cls="a"), mk_meta("val/nature/a/n0.jpg", NATURAL, qf=96,
                                      qf_exact=True, class_label="a",
                                      subset="val"),
             gen(0, cls="a"), gen(1, cls="a")]
    m = build_jpeg96_split(metas, CFG)
    outs = [e.output_path for e in m.entries]
    assert len(set(outs)) == len(outs)


# -------------------------------------------------------------- materialize

def test_materialize_encodes_and_copies(tmp_path):
    src = tmp_path / "src"
    (src / "train/nature/c0").mkdir(parents=True)
    (src / "train/sdv4/c0").mkdir(parents=True)
    for i in range(2):
        (src / f"train/nature/c0/n{i}.jpg").write_bytes(
            encode_qf(smooth_raster(64, 56, seed=i), 96))
        (src / f"train/sdv4/c0/g{i}.png").write_bytes(
            write_png(noise_raster(48, 40, seed=10 + i)))
    metas = [nat(i, w=64, h=56) for i in range(2)] + \
            [gen(i, w=48, h=40) for i in range(2)]
    manifest = build_jpeg96_split(metas, CFG)
    out = tmp_path / "out"
    report = materialize(manifest, out, source_root=src, jobs=2)
    assert report.failures == []
    assert len(report.written) == 4
    for e in manifest.entries:
        data = (out / e.output_path).read_bytes()
        fmt, w, h, qf, exact = parse_image_bytes(data)
        assert fmt == "JPEG" and (qf, exact) == (96, True)
        if e.action == ACTION_COPY:
            assert data == (src / e.source_path).read_bytes()


def test_materialize_collects_per_entry_failures(tmp_path):
    src = tmp_path / "src"
    (src / "train/nature/c0").mkdir(parents=True)
    (src / "train/sdv4/c0").mkdir(parents=True)
    (src / "train/nature/c0/n0.jpg").write_bytes(
        encode_qf(smooth_raster(32, 32, seed=1), 96))
    (src / "train/sdv4/c0/g0.png").write_bytes(b"ruined")
    manifest = build_jpeg96_split([nat(0, w=32, h=32), gen(0)], CFG)
    report = materialize(manifest, tmp_path / "out", source_root=src)
    assert len(report.written) == 1
    assert len(report.failures) == 1
    assert "g0.png" in report.failures[0][0]


def test_materialize_empty_manifest(tmp_path):
    manifest = build_jpeg96_split([nat(0), gen(0)], CFG)
    header_only = tmp_path / "empty.jsonl"
    header_only.write_text(next(manifest_to_lines(manifest)) + "\n",
                           encoding="utf-8")
    report = materialize(read_manifest(header_only), tmp_path / "out")
    assert report.written == [] and report.failures == []
