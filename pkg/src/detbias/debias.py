"""Constrained training splits: the quality-factor-matched split and the
size-constrained split, built as deterministic manifests and materialized
by copying or re-encoding files.

Natural images qualify only on an exact standard-table match at the
target quality factor; nearest-estimate matches would admit recompressed
outliers whose first encode was something else.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from detbias.errors import (
    ConstraintViolation,
    InsufficientData,
    IoError,
    ParseError,
)
from detbias.formats.meta import GENERATED, NATURAL, ImageMeta
from detbias.rng import SplitMix64, sample
from detbias.transcode import decode, encode_qf

ACTION_COPY = "copy"
ACTION_ENCODE = "encode_qf"


@dataclass(frozen=True)
class ConstraintConfig:
    target_qf: int = 96
    size_low: int = 450
    size_high: int = 550
    generator_native_side: int | None = None
    seed: int = 0
    per_class_balance: bool = True


@dataclass(frozen=True)
class ManifestEntry:
    source_path: str
    output_path: str
    class_label: str
    origin: str
    action: str  # ACTION_COPY or ACTION_ENCODE
    qf: int | None = None  # target quality for ACTION_ENCODE


@dataclass
class SplitManifest:
    config: ConstraintConfig
    seed: int
    entries: list[ManifestEntry] = field(default_factory=list)
    # class label -> origin -> count
    counts: dict = field(default_factory=dict)


def _output_path(meta: ImageMeta) -> str:
    # short path digest keeps names unique when subsets reuse file stems
    digest = hashlib.sha1(meta.path.encode("utf-8")).hexdigest()[:8]
    stem = Path(meta.path).stem
    return f"{meta.origin}/{meta.class_label}/{stem}_{digest}.jpg"


def _entry(meta: ImageMeta, target_qf: int) -> ManifestEntry:
    if meta.origin == NATURAL:
        action, qf = ACTION_COPY, None
    else:
        action, qf = ACTION_ENCODE, target_qf
    return ManifestEntry(
        source_path=meta.path,
        output_path=_output_path(meta),
        class_label=meta.class_label,
        origin=meta.origin,
        action=action,
        qf=qf,
    )


def _assemble(naturals, generated, config: ConstraintConfig) -> SplitManifest:
    """Seeded downsampling to equal counts (per class, or globally when
    balance is disabled), then a sorted manifest."""
    if not naturals or not generated:
        raise InsufficientData("an origin is empty after filtering")

    by_class: dict[str, tuple[list, list]] = {}
    group = (lambda m: m.class_label) if config.per_class_balance else (lambda m: "")
    for m in naturals:
        by_class.setdefault(group(m), ([], []))[0].append(m)
    for m in generated:
        by_class.setdefault(group(m), ([], []))[1].append(m)

    rng = SplitMix64(config.seed)
    entries = []
    counts: dict = {}
    # one rng stream, consumed in sorted class order, keeps the build a
    # pure function of (inputs, seed)
    for label in sorted(by_class):
        nat, gen = by_class[label]
        nat.sort(key=lambda m: m.path)
        gen.sort(key=lambda m: m.path)
        k = min(len(nat), len(gen))
        if k == 0:
            continue
        picked_nat = nat if len(nat) == k else sample(nat, k, rng)
        picked_gen = gen if len(gen) == k else sample(gen, k, rng)
        for m in picked_nat + picked_gen:
            entries.append(_entry(m, config.target_qf))
            counts.setdefault(m.class_label, {NATURAL: 0, GENERATED: 0})
            counts[m.class_label][m.origin] += 1

    if not entries:
        raise InsufficientData("no class has images of both origins")
    entries.sort(key=lambda e: (e.class_label, e.origin, e.source_path))
    return SplitManifest(config=config, seed=config.seed,
                         entries=entries, counts=counts)


def build_jpeg96_split(metas, config: ConstraintConfig) -> SplitManifest:
    """Quality-matched split: naturals already at the target quality
    factor (exact table match), generated sampled to equal count and
    marked for re-encoding at that factor."""
    naturals = [m for m in metas
                if m.origin == NATURAL and m.qf_exact
                and m.qf == config.target_qf]
    generated = [m for m in metas if m.origin == GENERATED]
    return _assemble(naturals, generated, config)


def _dedupe(metas):
    seen = set()
    out = []
    for m in sorted(metas, key=lambda m: (m.path, m.subset)):
        if m.path in seen:
            continue
        seen.add(m.path)
        out.append(m)
    return out


def build_size_split(metas, config: ConstraintConfig) -> SplitManifest:
    """Size-constrained split: pooled naturals at the target quality
    factor with both sides inside [size_low, size_high]; generated kept
    at their native side, which must fall inside the interval."""
    native = config.generator_native_side
    generated = [m for m in metas if m.origin == GENERATED]
    if native is None:
        # fall back to the modal generated side
        sides = sorted(m.width for m in generated)
        if not sides:
            raise InsufficientData("no generated images")
        native = max(set(sides), key=lambda s: (sides.count(s), -s))
    if not config.size_low <= native <= config.size_high:
        raise ConstraintViolation(
            f"generator native side {native} outside "
            f"[{config.size_low}, {config.size_high}]")

    naturals = [m for m in _dedupe(metas)
                if m.origin == NATURAL and m.qf_exact
                and m.qf == config.target_qf
                and config.size_low <= m.width <= config.size_high
                and config.size_low <= m.height <= config.size_high]
    return _assemble(naturals, generated, config)


# ------------------------------------------------------------- manifest io

def _config_dict(c: ConstraintConfig) -> dict:
    return {
        "target_qf": c.target_qf,
        "size_low": c.size_low,
        "size_high": c.size_high,
        "generator_native_side": c.generator_native_side,
        "seed": c.seed,
        "per_class_balance": c.per_class_balance,
    }


def manifest_to_lines(manifest: SplitManifest):
    """Header line (config, seed, counts), then one JSON line per entry."""
    yield json.dumps({
        "config": _config_dict(manifest.config),
        "seed": manifest.seed,
        "counts": manifest.counts,
    }, separators=(",", ":"), sort_keys=True)
    for e in manifest.entries:
        rec = {
            "source_path": e.source_path,
            "output_path": e.output_path,
            "class_label": e.class_label,
            "origin": e.origin,
            "action": e.action,
        }
        if e.qf is not None:
            rec["qf"] = e.qf
        yield json.dumps(rec, separators=(",", ":"))


def write_manifest(manifest: SplitManifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fp:
        for line in manifest_to_lines(manifest):
            fp.write(line + "\n")


def read_manifest(path) -> SplitManifest:
    with open(path, "r", encoding="utf-8") as fp:
        lines = [ln for ln in fp.read().splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty manifest")
    try:
        head = json.loads(lines[0])
        cfg = ConstraintConfig(**head["config"])
        manifest = SplitManifest(config=cfg, seed=head["seed"],
                                 counts=head["counts"])
        for ln in lines[1:]:
            rec = json.loads(ln)
            manifest.entries.append(ManifestEntry(
                source_path=rec["source_path"],
                output_path=rec["output_path"],
                class_label=rec["class_label"],
                origin=rec["origin"],
                action=rec["action"],
                qf=rec.get("qf"),
            ))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad manifest: {exc}") from None
    return manifest


# ------------------------------------------------------------ materialize

@dataclass
class MaterializeReport:
    written: list = field(default_factory=list)  # output paths
    failures: list = field(default_factory=list)  # (source_path, message)


def _materialize_one(entry: ManifestEntry, source_root: Path, out_dir: Path) -> str:
    src = source_root / entry.source_path
    dst = out_dir / entry.output_path
    try:
        data = src.read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {src}: {exc}") from None
    if entry.action == ACTION_ENCODE:
        data = encode_qf(decode(data), entry.qf)
    dst.parent.mkdir(parents=True, exist_ok=True)
    try:
        dst.write_bytes(data)
    except OSError as exc:
        raise IoError(f"cannot write {dst}: {exc}") from None
    return entry.output_path


def materialize(manifest: SplitManifest, out_dir, source_root=".",
                jobs: int | None = None) -> MaterializeReport:
    """Write every manifest entry under ``out_dir``.

    Copy entries are byte copies; encode entries are decoded and
    re-encoded at the manifest's quality factor. Per-entry failures are
    collected, never fatal; the report lists them in manifest order.
    """
    out_dir = Path(out_dir)
    source_root = Path(source_root)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = MaterializeReport()

    def run(entry):
        try:
            return _materialize_one(entry, source_root, out_dir), None
        except Exception as exc:  # collected per entry
            return None, f"{type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for entry, (written, err) in zip(
                manifest.entries, pool.map(run, manifest.entries)):
            if err is None:
                report.written.append(written)
            else:
                report.failures.append((entry.source_path, err))
    return report
