"""Command-line entry point ``coseg``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 pipeline halt.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import RunConfig
from .edivisive import detect_change_points
from .evaluation import run_rolling_experiment
from .io import basename, impute_missing, parse_csv, sha256_of, write_csv
from .model import DataError, validate_dataset
from .pipeline import PipelineHalted, compute_adjusted, run_pipeline
from .synth import PRESETS, Scenario, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_HALT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def jsonable(obj):
    """Plain-JSON copy; non-finite floats become strings so output stays strict JSON."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "NaN" if math.isnan(obj) else ("Infinity" if obj > 0 else "-Infinity")
    return obj


def dump_json(obj, path) -> None:
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def _load_subjects(args, config: RunConfig):
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    cols = args.passive_columns.split(",") if args.passive_columns else None
    subjects = parse_csv(path, passive_columns=cols)
    if args.subject:
        subjects = [s for s in subjects if s.subject_id == args.subject]
        if not subjects:
            raise DataError(f"subject {args.subject!r} not found in {path.name}")
    out = []
    for s in subjects:
        s = impute_missing(s, config.impute_radius)
        out.append(validate_dataset(s, min_segment_length=config.min_size, require_cpd=True))
    return path, out


def _load_config(args) -> RunConfig:
    if not args.config:
        return RunConfig()
    if not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        return RunConfig.load(args.config)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config {args.config}: {exc}") from None


def _provenance(path, config: RunConfig, series) -> dict:
    return {
        "input": {"basename": basename(path), "sha256": sha256_of(path)},
        "config": config.to_dict(),
        "seeds": {"cpd_permutations": config.seed, "experiment": config.seed},
        "subject_id": series.subject_id,
        "T": series.T,
        "passive_columns": list(series.passive_columns),
        "date_gaps": list(series.gaps),
        "imputed_cells": [[int(i) + 1, series.passive_columns[j]]
                          for i, j in zip(*np.nonzero(series.missing_mask))],
    }


def _fmt(x) -> str:
    return repr(float(x)) if math.isfinite(x) else str(jsonable(float(x)))


def _write_segments(path, series, seg, labeled) -> None:
    means = labeled.segment_means if labeled is not None else None
    ranks = {lab: r for r, lab in enumerate(labeled.stress_ranking, 1)} if labeled else {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["segment", "first_day", "last_day", "first_date", "last_date",
                    "n_days", "mean_adjusted_stress", "stress_rank"])
        for k, (first, last) in enumerate(seg.day_ranges(), start=1):
            w.writerow([k, first, last, series.dates[first - 1].isoformat(),
                        series.dates[last - 1].isoformat(), last - first + 1,
                        _fmt(means[k - 1]) if means else "", ranks.get(k, "")])


def _write_plot(path, series, adjusted, seg, step1) -> None:
    labels = seg.labels()
    final, initial = set(seg.boundaries), set(step1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["t", "date", "stress", "arousal", "valence", "adjusted_stress",
                    "segment", "final_boundary", "initial_boundary"])
        for i in range(series.T):
            t = i + 1
            w.writerow([t, series.dates[i].isoformat(), int(series.stress[i]),
                        int(series.arousal[i]), int(series.valence[i]),
                        _fmt(adjusted.values[i]), int(labels[i]),
                        int(t in final), int(t in initial)])


def cmd_run(args) -> int:
    config = _load_config(args)
    path, subjects = _load_subjects(args, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pcfg = config.pipeline_config()
    status = EXIT_OK
    for s in subjects:
        adjusted = compute_adjusted(s, pcfg)
        seg, labeled, trace = run_pipeline(s, pcfg, adjusted=adjusted)
        report = _provenance(path, config, s) | {
            "boundaries": list(seg.boundaries),
            "n_segments": seg.n_segments,
            "halted": labeled is None,
            "halt_step": trace.halt_step,
            "trace": trace.to_dict(),
            "provenance": {str(b): {"step": info.step, "p_values": dict(info.p_values)}
                           for b, info in seg.provenance.items()},
        }
        if labeled is not None:
            report["labels"] = {
                "day_ranges": [list(r) for r in seg.day_ranges()],
                "segment_means": list(labeled.segment_means),
                "stress_ranking": list(labeled.stress_ranking),
            }
        stem = out / s.subject_id
        dump_json(report, f"{stem}_report.json")
        _write_segments(f"{stem}_segments.csv", s, seg, labeled)
        _write_plot(f"{stem}_plot.tsv", s, adjusted, seg, trace.boundaries.get(1, ()))
        if labeled is None:
            print(f"{s.subject_id}: pipeline halted at step {trace.halt_step} "
                  f"({trace.halt_reason})", file=sys.stderr)
            status = EXIT_HALT
    return status


METRIC_ROWS = ("Rec", "Prec", "Acc")


def _write_metrics(path, report) -> None:
    methods = list(report.metrics)
    K = report.n_classes
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", *methods])
        for name, attr in zip(METRIC_ROWS, ("recall", "precision", "accuracy")):
            w.writerow([name, *(_fmt(getattr(report.metrics[m], attr)) for m in methods)])
        for k in range(K):
            w.writerow([f"F1_{k + 1}", *(_fmt(report.metrics[m].f1_per_class[k])
                                         for m in methods)])


def _write_confusion(path, report) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "true_label", "predicted_label", "count"])
        for m, C in report.confusion.items():
            for i, j in np.ndindex(C.shape):
                w.writerow([m, i + 1, j + 1, int(C[i, j])])


def cmd_evaluate(args) -> int:
    config = _load_config(args)
    path, subjects = _load_subjects(args, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for s in subjects:
        try:
            report = run_rolling_experiment(s, config.pipeline_config(),
                                            config.experiment_config(), workers=args.workers)
        except PipelineHalted as exc:
            print(f"{s.subject_id}: full-data pipeline halted at step {exc.step} "
                  f"({exc.reason})", file=sys.stderr)
            status = EXIT_HALT
            continue
        stem = out / s.subject_id
        dump_json(_provenance(path, config, s) | {"experiment": report.to_dict()},
                  f"{stem}_evaluation.json")
        _write_metrics(f"{stem}_metrics.csv", report)
        _write_confusion(f"{stem}_confusion.csv", report)
    return status


def cmd_cpd(args) -> int:
    config = _load_config(args)
    path, subjects = _load_subjects(args, config)
    result = {}
    for s in subjects:
        stages: list = []
        seg = detect_change_points(s.passive, config.divergence_config(), stages)
        result[s.subject_id] = {"T": s.T, "boundaries": list(seg.boundaries), "stages": stages}
    doc = {"input": {"basename": basename(path), "sha256": sha256_of(path)},
           "config": config.to_dict(), "subjects": result}
    dump_json(doc, args.out)
    return EXIT_OK


def scenario_from_dict(d: dict) -> Scenario:
    """``{"preset": name, ...}`` calls a preset factory; otherwise fields of Scenario."""
    d = dict(d)
    if "preset" in d:
        name = d.pop("preset")
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        return PRESETS[name](**d)
    known = {f.name for f in fields(Scenario)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValueError(f"unknown scenario keys: {unknown}")
    return Scenario(**d)


def cmd_synth(args) -> int:
    if args.scenario:
        if not Path(args.scenario).is_file():
            raise UsageError(f"scenario file not found: {args.scenario}")
        scenario_doc = json.loads(Path(args.scenario).read_text())
    else:
        scenario_doc = {"preset": args.preset}
    if args.seed is not None:
        scenario_doc["seed"] = args.seed
    series, _ = generate(scenario_from_dict(scenario_doc))
    write_csv(args.out, [series])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="coseg", description="Co-segmentation of passive sensing and stress.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(p):
        p.add_argument("input", help="CSV in the ingestion schema")
        p.add_argument("--config", help="JSON file of RunConfig keys")
        p.add_argument("--subject", help="only process this subject_id")
        p.add_argument("--passive-columns",
                       help="comma-separated passive column names to require")

    p = sub.add_parser("run", help="full pipeline per subject")
    data_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="rolling-window experiment per subject")
    data_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1, help="processes for windows")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("cpd", help="change-point detection only")
    data_args(p)
    p.add_argument("--out", required=True, help="boundaries JSON path")
    p.set_defaults(func=cmd_cpd)

    p = sub.add_parser("synth", help="write a synthetic subject as CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="scenario JSON file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"coseg: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"coseg: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
