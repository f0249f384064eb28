"""Command-line pipeline: scan, audit, debias, materialize, probe, eval,
report.

Every stage reads and writes plain files, so stages can run on separate
machines. Exit codes: 0 success, 1 fatal error, 2 completed with
per-item errors (listed as JSON-lines on stderr). Each stage drops a
run.json provenance record next to its outputs; its timestamp is the
only non-deterministic output of the pipeline.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from detbias import audit as auditmod
from detbias import debias as debiasmod
from detbias import evalharness as evalmod
from detbias import probe as probemod
from detbias.config import RunConfig, load_config
from detbias.errors import DetbiasError
from detbias.formats.meta import read_metas, write_metas
from detbias.formats.scan import scan_corpus


def _diag(level: str, event: str, **fields) -> None:
    rec = {"level": level, "event": event}
    rec.update(fields)
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_run_record(out_dir: Path, command: str, args, inputs, outputs) -> None:
    config_digest = None
    if getattr(args, "config", None):
        config_digest = _sha256(Path(args.config))
    doc = {
        "command": command,
        "config_digest": config_digest,
        "seed": getattr(args, "seed", None),
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": sorted(str(o) for o in outputs),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    (out_dir / "run.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args) -> RunConfig:
    if not args.config:
        raise DetbiasError("this command requires --config")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.constraint = dataclasses.replace(cfg.constraint, seed=args.seed)
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg


def _out_dir(args, cfg: RunConfig | None, command: str) -> Path:
    if args.out:
        out = Path(args.out)
    elif cfg is not None:
        out = cfg.out / command
    else:
        out = Path("out") / command
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- commands

def cmd_scan(args) -> int:
    cfg = _load(args)
    root = Path(args.root) if args.root else cfg.root
    out = _out_dir(args, cfg, "scan")
    result = scan_corpus(root, cfg.labeler, jobs=cfg.jobs)
    metas_path = out / "metas.jsonl"
    with open(metas_path, "w", encoding="utf-8") as fp:
        write_metas(result.metas, fp)
    for f in result.failures:
        _diag("error", "scan_failure", path=f.path, message=f.error)
    _write_run_record(out, "scan", args, [], [metas_path])
    _diag("info", "scan_done", files=len(result.metas),
          failures=len(result.failures))
    return 2 if result.failures else 0


def _read_metas_file(path) -> list:
    with open(path, "r", encoding="utf-8") as fp:
        return read_metas(fp)


def cmd_audit(args) -> int:
    cfg = _load(args)
    metas_path = Path(args.metas) if args.metas else cfg.out / "scan" / "metas.jsonl"
    out = _out_dir(args, cfg, "audit")
    metas = _read_metas_file(metas_path)
    report = auditmod.audit_corpus(metas)
    (out / "audit.json").write_text(
        json.dumps(auditmod.report_to_json(report), indent=2, sort_keys=True)
        + "\n", encoding="utf-8")
    outputs = [out / "audit.json"]
    for name, hist in (("qf_hist_natural", report.qf_hist_natural),
                       ("qf_hist_generated", report.qf_hist_generated)):
        p = out / f"{name}.csv"
        p.write_text(auditmod.hist_csv(hist), encoding="utf-8")
        outputs.append(p)
    for name, grid in (("size_grid_natural", report.size_grid_natural),
                       ("size_grid_generated", report.size_grid_generated)):
        p = out / f"{name}.csv"
        p.write_text(auditmod.grid_csv(grid), encoding="utf-8")
        outputs.append(p)
    _write_run_record(out, "audit", args, [metas_path], outputs)
    _diag("info", "audit_done",
          qf_divergence=report.qf_divergence,
          size_divergence=report.size_divergence)
    return 0


def cmd_debias(args) -> int:
    cfg = _load(args)
    metas_path = Path(args.metas) if args.metas else cfg.out / "scan" / "metas.jsonl"
    out = _out_dir(args, cfg, "debias")
    metas = _read_metas_file(metas_path)
    if args.mode == "jpeg96":
        manifest = debiasmod.build_jpeg96_split(metas, cfg.constraint)
    else:
        manifest = debiasmod.build_size_split(metas, cfg.constraint)
    manifest_path = out / f"manifest_{args.mode}.jsonl"
    debiasmod.write_manifest(manifest, manifest_path)
    _write_run_record(out, "debias", args, [metas_path], [manifest_path])
    _diag("info", "debias_done", mode=args.mode, entries=len(manifest.entries))
    return 0


def cmd_materialize(args) -> int:
    cfg = _load(args)
    root = Path(args.root) if args.root else cfg.root
    out = _out_dir(args, cfg, "materialize")
    manifest = debiasmod.read_manifest(args.manifest)
    report = debiasmod.materialize(manifest, out / "split",
                                   source_root=root, jobs=cfg.jobs)
    for src, message in report.failures:
        _diag("error", "materialize_failure", path=src, message=message)
    report_path = out / "materialize_report.json"
    report_path.write_text(json.dumps({
        "written": report.written,
        "failures": [{"path": p, "message": m} for p, m in report.failures],
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_record(out, "materialize", args, [Path(args.manifest)],
                      [report_path])
    _diag("info", "materialize_done", written=len(report.written),
          failures=len(report.failures))
    return 2 if report.failures else 0


def cmd_probe(args) -> int:
    cfg = _load(args)
    metas_path = Path(args.metas) if args.metas else cfg.out / "scan" / "metas.jsonl"
    out = _out_dir(args, cfg, "probe")
    metas = _read_metas_file(metas_path)
    train, held = probemod.split_holdout(metas, cfg.seed, cfg.probe_holdout)
    model = probemod.train_probe(
        [probemod.extract_features(m) for m in train],
        [m.origin for m in train], seed=cfg.seed, rounds=cfg.probe_rounds)
    metrics = probemod.eval_probe(
        model, [probemod.extract_features(m) for m in held],
        [m.origin for m in held])
    model_path = out / "probe_model.json"
    model_path.write_text(probemod.model_to_json(model) + "\n",
                          encoding="utf-8")
    metrics_path = out / "probe_metrics.json"
    metrics_path.write_text(json.dumps({
        "train_size": len(train),
        "eval_size": len(held),
        "metrics": metrics,
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_run_record(out, "probe", args, [metas_path],
                      [model_path, metrics_path])
    _diag("info", "probe_done", **metrics)
    return 0


def _eval_artifacts(args):
    """Shared by eval and report: load predictions, compute all matrices,
    the robustness curve, and optional size grids."""
    records, errors = evalmod.load_predictions(args.predictions)
    for lineno, message in errors:
        _diag("error", "bad_prediction_row", line=lineno, message=message)
    threshold = args.threshold

    artifacts = {}
    by_cond: dict = {}
    for r in records:
        by_cond.setdefault(r.condition, []).append(r)
    for cond in evalmod.condition_order(by_cond):
        for metric in (evalmod.METRIC_ACC, evalmod.METRIC_PREC,
                       evalmod.METRIC_REC):
            artifacts[f"matrix_{metric}_{cond}"] = evalmod.accuracy_matrix(
                by_cond[cond], metric, threshold)
    if records:
        artifacts["robustness"] = evalmod.robustness_curve(records, threshold)

    if args.metas:
        metas = _read_metas_file(args.metas)
        native = args.native_side
        by_train: dict = {}
        for r in records:
            by_train.setdefault(r.train_subset, []).append(r)
        for subset in sorted(by_train):
            artifacts[f"size_grid_{subset}"] = evalmod.size_interval_accuracy(
                by_train[subset], metas, native_side=native,
                threshold=threshold)
    return records, errors, artifacts


def cmd_eval(args) -> int:
    out = _out_dir(args, None, "eval")
    records, errors, artifacts = _eval_artifacts(args)
    outputs = []
    for name, obj in sorted(artifacts.items()):
        p = out / f"{name}.csv"
        p.write_bytes(evalmod.emit_report(obj, "csv"))
        outputs.append(p)
    inputs = [args.predictions] + ([args.metas] if args.metas else [])
    _write_run_record(out, "eval", args, inputs, outputs)
    _diag("info", "eval_done", records=len(records), artifacts=len(outputs))
    return 2 if errors else 0


def cmd_report(args) -> int:
    from detbias.report import figures  # pulls matplotlib only when used

    out = _out_dir(args, None, "report")
    records, errors, artifacts = _eval_artifacts(args)
    outputs = []
    for name, obj in sorted(artifacts.items()):
        csv_path = out / f"{name}.csv"
        csv_path.write_bytes(evalmod.emit_report(obj, "csv"))
        svg_path = out / f"{name}.svg"
        svg_path.write_bytes(evalmod.emit_report(obj, "svg"))
        png_path = out / f"{name}.png"
        if isinstance(obj, evalmod.EvalMatrix):
            figures.save_matrix_png(obj, png_path)
        elif isinstance(obj, evalmod.SizeGrid):
            figures.save_grid_png(obj, png_path)
        else:
            figures.save_curve_png(obj, png_path)
        outputs += [csv_path, svg_path, png_path]
    inputs = [args.predictions] + ([args.metas] if args.metas else [])
    _write_run_record(out, "report", args, inputs, outputs)
    _diag("info", "report_done", records=len(records), artifacts=len(outputs))
    return 2 if errors else 0


# ------------------------------------------------------------------- main

def _add_common(sp) -> None:
    sp.add_argument("--config", help="run configuration file")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--seed", type=int, help="override the configured seed")
    sp.add_argument("--jobs", type=int, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detbias",
        description="Audit, debias, and evaluate AI-image detection corpora.")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("scan", help="parse every image under the corpus root")
    sp.add_argument("--root", help="corpus root (default from config)")
    _add_common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("audit", help="measure compression/size bias")
    sp.add_argument("--metas", help="metadata JSONL from scan")
    _add_common(sp)
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("debias", help="build a constrained split manifest")
    sp.add_argument("--mode", choices=["jpeg96", "size"], required=True)
    sp.add_argument("--metas", help="metadata JSONL from scan")
    _add_common(sp)
    sp.set_defaults(func=cmd_debias)

    sp = sub.add_parser("materialize", help="write the files of a manifest")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--root", help="source root for manifest paths")
    _add_common(sp)
    sp.set_defaults(func=cmd_materialize)

    sp = sub.add_parser("probe", help="train/evaluate the metadata probe")
    sp.add_argument("--metas", help="metadata JSONL from scan")
    _add_common(sp)
    sp.set_defaults(func=cmd_probe)

    for name, fn in (("eval", cmd_eval), ("report", cmd_report)):
        sp = sub.add_parser(
            name, help="compute evaluation artifacts from predictions"
            if name == "eval" else "render evaluation artifacts with figures")
        sp.add_argument("--predictions", required=True,
                        help="detector prediction CSV")
        sp.add_argument("--metas", help="metadata JSONL for the size grid")
        sp.add_argument("--threshold", type=float, default=0.5)
        sp.add_argument("--native-side", type=int, default=None,
                        help="generated-native side for the grid marker")
        _add_common(sp)
        sp.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DetbiasError as exc:
        _diag("fatal", "error", kind=type(exc).__name__, message=str(exc))
        return 1
    except OSError as exc:
        _diag("fatal", "io_error", message=str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
