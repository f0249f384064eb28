"""Run configuration: a flat INI file with one section per pipeline
concern. Every value is a plain string a human can diff; the seed is
mandatory so no run ever depends on the wall clock."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path

from detbias.debias import ConstraintConfig
from detbias.errors import ParseError
from detbias.formats.scan import PathLabeler


@dataclass
class RunConfig:
    root: Path
    out: Path
    seed: int
    labeler: PathLabeler
    constraint: ConstraintConfig
    series: tuple[int, ...] = (95, 90, 80, 70, 60)
    probe_rounds: int = 32
    probe_holdout: float = 0.5
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    threshold: float = 0.5


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return default


def _component(parser, key, default):
    """Path component index; "none" (or blank) disables the component."""
    s = _get(parser, "corpus", key)
    if s is None:
        return default
    s = s.strip().lower()
    if s in ("", "none"):
        return None
    return int(s)


def load_config(path) -> RunConfig:
    """Parse and validate a config file; referenced paths must exist."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ParseError(f"cannot read config {path}")

    try:
        root = Path(parser.get("corpus", "root"))
        seed_s = _get(parser, "run", "seed")
        if seed_s is None:
            raise ParseError("run.seed is mandatory")
        seed = int(seed_s)
        out = Path(_get(parser, "run", "out", "out"))
        jobs = int(_get(parser, "run", "jobs", os.cpu_count() or 1))
        threshold = float(_get(parser, "run", "threshold", 0.5))

        natural_names = frozenset(
            s.strip().lower() for s in
            _get(parser, "corpus", "natural_names", "nature,natural").split(",")
            if s.strip())
        labeler = PathLabeler(
            subset_component=_component(parser, "subset_component", 0),
            origin_component=_component(parser, "origin_component", 1),
            class_component=_component(parser, "class_component", 2),
            natural_names=natural_names,
            generator_from=_get(parser, "corpus", "generator_from", "origin"),
        )

        native = _get(parser, "constraint", "generator_native_side")
        constraint = ConstraintConfig(
            target_qf=int(_get(parser, "constraint", "target_qf", 96)),
            size_low=int(_get(parser, "constraint", "size_low", 450)),
            size_high=int(_get(parser, "constraint", "size_high", 550)),
            generator_native_side=int(native) if native is not None else None,
            seed=seed,
            per_class_balance=_get(
                parser, "constraint", "per_class_balance", "true"
            ).strip().lower() in ("1", "true", "yes", "on"),
        )

        series_s = _get(parser, "series", "qualities", "95,90,80,70,60")
        series = tuple(int(v) for v in series_s.split(",") if v.strip())
        probe_rounds = int(_get(parser, "probe", "rounds", 32))
        probe_holdout = float(_get(parser, "probe", "holdout", 0.5))
    except (configparser.Error, ValueError) as exc:
        raise ParseError(f"bad config {path}: {exc}") from None

    if not root.is_dir():
        raise ParseError(f"corpus root {root} does not exist")
    return RunConfig(
        root=root, out=out, seed=seed, labeler=labeler, constraint=constraint,
        series=series, probe_rounds=probe_rounds, probe_holdout=probe_holdout,
        jobs=jobs, threshold=threshold,
    )
