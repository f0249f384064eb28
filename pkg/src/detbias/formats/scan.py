"""Corpus scanner: walk a directory tree, parse image headers, attach
labels derived from each file's path.

Parsing may run on several threads; the result is sorted by relative
path, so output is independent of enumeration and scheduling order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

from detbias.errors import DetbiasError, IoError, MalformedStream
from detbias.formats import jpeg as jpegfmt
from detbias.formats import png as pngfmt
from detbias.formats.meta import (
    FORMAT_JPEG,
    FORMAT_PNG,
    GENERATED,
    NATURAL,
    ImageMeta,
)
from detbias.formats.quant import estimate_qf


@dataclass(frozen=True)
class Labels:
    class_label: str
    origin: str
    generator: str | None
    subset: str


@dataclass(frozen=True)
class PathLabeler:
    """Derive labels from path components of the file's relative path.

    Component indices refer to the directory parts (filename excluded).
    The origin component's value decides NATURAL vs GENERATED; for
    generated files the generator name comes from that component or from
    the subset component, per ``generator_from``.
    """

    subset_component: int | None = 0
    origin_component: int = 1
    class_component: int | None = 2
    natural_names: frozenset[str] = frozenset({"nature", "natural"})
    generator_from: str = "origin"  # "origin" | "subset"
    subset_default: str = "all"
    class_default: str = "unlabeled"

    def __call__(self, rel_path: str) -> Labels:
        dirs = PurePosixPath(rel_path).parts[:-1]

        def part(idx, default):
            if idx is None:
                return default
            if idx >= len(dirs):
                raise ValueError(
                    f"path {rel_path!r} has no component {idx} for labeling")
            return dirs[idx]

        subset = part(self.subset_component, self.subset_default)
        origin_value = part(self.origin_component, None)
        if origin_value is None:
            raise ValueError(f"path {rel_path!r} too shallow for origin label")
        class_label = part(self.class_component, self.class_default)
        if origin_value.lower() in self.natural_names:
            return Labels(class_label, NATURAL, None, subset)
        generator = subset if self.generator_from == "subset" else origin_value
        return Labels(class_label, GENERATED, generator, subset)


@dataclass
class ScanFailure:
    path: str
    error: str


@dataclass
class ScanResult:
    metas: list[ImageMeta] = field(default_factory=list)
    failures: list[ScanFailure] = field(default_factory=list)


def parse_image_bytes(data: bytes):
    """Sniff and parse JPEG/PNG header metadata from raw bytes.

    Returns (format, width, height, qf, qf_exact). Raises MalformedStream
    on unrecognized or damaged input, UnsupportedStream where applicable.
    """
    if data[:2] == b"\xff\xd8":
        info = jpegfmt.parse_jpeg_meta(data)
        qf = qf_exact = None
        if info.tables is not None:
            q, exact, _dist = estimate_qf(info.tables)
            qf, qf_exact = q, exact
        return FORMAT_JPEG, info.width, info.height, qf, bool(qf_exact)
    if data[:8] == pngfmt.SIGNATURE:
        info = pngfmt.parse_png_meta(data)
        return FORMAT_PNG, info.width, info.height, None, False
    raise MalformedStream("unrecognized image format")


def _scan_one(root: Path, rel: str, labeling) -> ImageMeta:
    labels = labeling(rel)
    data = (root / rel).read_bytes()
    fmt, width, height, qf, qf_exact = parse_image_bytes(data)
    return ImageMeta(
        path=rel,
        format=fmt,
        width=width,
        height=height,
        qf=qf,
        qf_exact=qf_exact,
        class_label=labels.class_label,
        origin=labels.origin,
        generator=labels.generator,
        subset=labels.subset,
    )


def scan_corpus(root, labeling, jobs: int | None = None) -> ScanResult:
    """Parse every regular file under ``root``.

    Each file yields an ImageMeta or a per-file failure; failures never
    abort the scan. Output is sorted by relative path.
    """
    root = Path(root)
    if not root.is_dir():
        raise IoError(f"corpus root {root} is not a readable directory")

    rels = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            rel = Path(dirpath, name).relative_to(root).as_posix()
            rels.append(rel)
    rels.sort()

    result = ScanResult()

    def work(rel):
        try:
            return _scan_one(root, rel, labeling)
        except (DetbiasError, OSError, ValueError) as exc:
            return ScanFailure(rel, str(exc))

    jobs = jobs or os.cpu_count() or 1
    if jobs > 1 and len(rels) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, rels))
    else:
        outcomes = [work(rel) for rel in rels]

    for out in outcomes:  # rels were sorted, map preserves order
        if isinstance(out, ScanFailure):
            result.failures.append(out)
        else:
            result.metas.append(out)
    return result
