"""Shared fixtures: deterministic rasters and a small labeled corpus
tree that the CLI and pipeline tests reuse."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from detbias.formats.meta import GENERATED, NATURAL, ImageMeta
from detbias.transcode import Raster, encode_qf, write_png


def smooth_raster(w: int, h: int, seed: int = 0, gray: bool = False) -> Raster:
    """Low-frequency pattern with mild noise; compresses gracefully so
    codec round-trip errors stay interpretable."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    base = (np.sin(xx / 19.0 + seed * 0.7) + np.cos(yy / 13.0 - seed)) * 55 + 128
    if gray:
        img = base[..., None] + rng.normal(0, 3, (h, w, 1))
    else:
        img = np.stack([base, np.roll(base, 5, axis=0), np.roll(base, 9, axis=1)],
                       axis=-1) + rng.normal(0, 3, (h, w, 3))
    return Raster.from_array(np.clip(img, 0, 255).astype(np.uint8))


def noise_raster(w: int, h: int, seed: int = 0, channels: int = 3) -> Raster:
    rng = np.random.default_rng(seed)
    return Raster.from_array(
        rng.integers(0, 256, (h, w, channels), dtype=np.uint8))


def mk_meta(path="a/x.jpg", origin=NATURAL, *, width=512, height=512,
            fmt="JPEG", qf=None, qf_exact=False, class_label="c0",
            subset="train", generator=None) -> ImageMeta:
    if origin == GENERATED and generator is None:
        generator = "sdv4"
    return ImageMeta(path=path, format=fmt, width=width, height=height,
                     qf=qf, qf_exact=qf_exact, class_label=class_label,
                     origin=origin, subset=subset, generator=generator)


def build_corpus(root: Path, n_nat: int = 6, n_gen: int = 6,
                 classes=("c0", "c1"), gen_name: str = "sdv4") -> Path:
    """Corpus tree laid out as train/<origin>/<class>/file. Naturals are
    JPEGs alternating qf 96/85; generated are 512x512 PNGs."""
    for i in range(n_nat):
        cls = classes[i % len(classes)]
        p = root / "train" / "nature" / cls / f"n{i}.jpg"
        p.parent.mkdir(parents=True, exist_ok=True)
        qf = 96 if i % 2 == 0 else 85
        p.write_bytes(encode_qf(smooth_raster(480 + 8 * i, 500, seed=i), qf))
    for i in range(n_gen):
        cls = classes[i % len(classes)]
        p = root / "train" / gen_name / cls / f"g{i}.png"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_bytes(write_png(smooth_raster(512, 512, seed=100 + i)))
    return root


@pytest.fixture()
def corpus(tmp_path):
    return build_corpus(tmp_path / "corpus")


@pytest.fixture()
def config_file(tmp_path, corpus):
    cfg = tmp_path / "run.ini"
    cfg.write_text(
        "[corpus]\n"
        f"root = {corpus}\n"
        "natural_names = nature\n"
        "generator_from = origin\n"
        "\n[run]\n"
        "seed = 11\n"
        f"out = {tmp_path / 'out'}\n"
        "jobs = 2\n",
        encoding="utf-8")
    return cfg
