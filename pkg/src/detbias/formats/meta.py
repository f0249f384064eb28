"""Per-file image metadata records and their JSON-lines serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass

from detbias.errors import DomainError, ParseError

FORMAT_JPEG = "JPEG"
FORMAT_PNG = "PNG"
FORMAT_OTHER = "OTHER"

NATURAL = "NATURAL"
GENERATED = "GENERATED"


@dataclass(frozen=True)
class ImageMeta:
    """One scanned file: container format, dimensions, quality evidence,
    and corpus labels. Immutable; safe to share between workers."""

    path: str
    format: str
    width: int
    height: int
    class_label: str
    origin: str
    subset: str
    generator: str | None = None
    qf: int | None = None
    qf_exact: bool = False

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise DomainError(f"non-positive dimensions for {self.path}")
        if self.origin not in (NATURAL, GENERATED):
            raise DomainError(f"bad origin {self.origin!r}")
        if self.origin == GENERATED and not self.generator:
            raise DomainError("GENERATED origin requires a generator name")
        if self.origin == NATURAL and self.generator is not None:
            raise DomainError("NATURAL origin carries no generator name")
        if self.qf_exact and self.qf is None:
            raise DomainError("qf_exact without qf")
        if self.qf is not None and not 1 <= self.qf <= 100:
            raise DomainError(f"qf {self.qf} outside [1, 100]")


_FIELD_ORDER = ("path", "format", "width", "height", "qf", "qf_exact",
                "class_label", "origin", "generator", "subset")


def meta_to_obj(meta: ImageMeta) -> dict:
    obj = {}
    for name in _FIELD_ORDER:
        value = getattr(meta, name)
        if value is None:
            continue  # absent optionals omitted
        if name == "qf_exact" and meta.qf is None:
            continue
        obj[name] = value
    return obj


def meta_to_json(meta: ImageMeta) -> str:
    return json.dumps(meta_to_obj(meta), separators=(",", ":"))


def meta_from_obj(obj: dict) -> ImageMeta:
    try:
        return ImageMeta(
            path=obj["path"],
            format=obj["format"],
            width=int(obj["width"]),
            height=int(obj["height"]),
            class_label=obj["class_label"],
            origin=obj["origin"],
            subset=obj["subset"],
            generator=obj.get("generator"),
            qf=obj.get("qf"),
            qf_exact=bool(obj.get("qf_exact", False)),
        )
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise ParseError(f"bad metadata record: {exc}") from exc


def write_metas(metas, fp) -> None:
    """Serialize records one JSON object per line, in the given order."""
    for meta in metas:
        fp.write(meta_to_json(meta))
        fp.write("\n")


def read_metas(fp) -> list[ImageMeta]:
    """Parse a JSON-lines metadata file, failing with the offending line."""
    metas = []
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON: {exc}") from exc
        try:
            metas.append(meta_from_obj(obj))
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    return metas
