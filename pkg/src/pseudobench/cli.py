"""Command-line entry point: ``pseudobench {synth,inspect,run,report}``.

Exit codes: 0 success, 2 usage or configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections import Counter, defaultdict
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import io, stats
from .classify import get_pipelines
from .core import NOTHING
from .epoching import RULES, WindowConfig, inject_idle, resolve_windows
from .errors import FormatError, ParameterError, PseudoBenchError, ValidationError
from .evaluation import EvalConfig, run_benchmark
from .preprocess import BandSpec
from .synth import SynthSpec, generate

log = logging.getLogger("pseudobench")

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _load_json(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return cfg


def _synth_spec(d: dict, seed=None) -> SynthSpec:
    known = {f.name for f in fields(SynthSpec)}
    extra = set(d) - known - {"dataset_id"}
    if extra:
        raise UsageError(f"unknown synth fields: {sorted(extra)}")
    kw = {k: v for k, v in d.items() if k in known}
    if seed is not None:
        kw["seed"] = seed
    try:
        return SynthSpec(**kw)
    except (TypeError, ParameterError) as exc:
        raise UsageError(f"invalid synth spec: {exc}") from None


# ------------------------------------------------------------------ synth

def write_dataset(recs, out_dir: Path, dataset_id: str, spec: SynthSpec | None = None) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for r in recs:
        name = f"sub-{r.subject_id}_ses-{r.session_id}.json"
        io.write_recording(r, out_dir / name)
        names.append(name)
    index = {"dataset_id": dataset_id, "recordings": names}
    if spec is not None:
        index["spec"] = asdict(spec)
    path = out_dir / "index.json"
    path.write_text(json.dumps(index, indent=2) + "\n")
    return path


def read_dataset(index_path) -> tuple[str, list]:
    index_path = Path(index_path)
    try:
        index = json.loads(index_path.read_text())
        names = index["recordings"]
        dataset_id = str(index.get("dataset_id", index_path.parent.name))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{index_path}: malformed dataset index ({exc})") from None
    return dataset_id, [io.read_recording(index_path.parent / n) for n in names]


def cmd_synth(args) -> int:
    cfg = _load_json(args.config) if args.config else {}
    spec = _synth_spec(cfg, args.seed)
    dataset_id = str(cfg.get("dataset_id", "synth"))
    recs = generate(spec)
    out = Path(args.out or ".") / dataset_id
    index = write_dataset(recs, out, dataset_id, spec)
    print(f"dataset {dataset_id}: {spec.n_subjects} subject(s) x {spec.n_sessions} session(s), "
          f"classes {', '.join(spec.classes)} (+ {NOTHING}), {len(recs)} recording(s)")
    print(f"index: {index}")
    return 0


# ---------------------------------------------------------------- inspect

def inspect_recording(rec, wcfg: WindowConfig) -> dict:
    """Per-class window counts after idle injection and sliding, with mixed-window rules."""
    tiled = inject_idle(rec)
    onsets, idx, rule = resolve_windows(tiled, wcfg)
    labels = [tiled.events[i].label for i in idx]
    counts = dict(sorted(Counter(labels).items()))
    rules = Counter(RULES[int(r)] for r in rule)
    mixed = [{"onset_sample": int(o), "label": lab, "rule": RULES[int(r)]}
             for o, lab, r in zip(onsets, labels, rule) if r != 0]
    return {
        "subject_id": rec.subject_id,
        "session_id": rec.session_id,
        "n_samples": rec.n_samples,
        "window_samples": wcfg.window_samples(rec.sample_rate_hz),
        "step_samples": wcfg.step_samples(rec.sample_rate_hz),
        "n_windows": len(onsets),
        "class_counts": counts,
        "imbalance_ratio": max(counts.values()) / min(counts.values()),
        "n_mixed": len(mixed),
        "rule_counts": {name: rules.get(name, 0) for name in RULES.values()},
        "mixed_windows": mixed,
    }


def cmd_inspect(args) -> int:
    rec = io.read_recording(args.recording)
    wcfg = WindowConfig(args.window_seconds, args.overlap)
    report = inspect_recording(rec, wcfg)
    if args.format == "json":
        print(json.dumps(report, indent=2))
        return 0
    print(f"subject {report['subject_id']} session {report['session_id']}: "
          f"{report['n_windows']} windows (w={report['window_samples']}, s={report['step_samples']})")
    for label, n in report["class_counts"].items():
        print(f"  {label:<16}{n:>7}")
    print(f"imbalance ratio: {report['imbalance_ratio']:.3f}")
    print(f"mixed windows: {report['n_mixed']} "
          + ", ".join(f"{k}={v}" for k, v in report["rule_counts"].items() if k != "single"))
    return 0


# -------------------------------------------------------------------- run

def _eval_config(cfg: dict, seed) -> EvalConfig:
    try:
        window = WindowConfig(**cfg.get("window", {}))
        band = BandSpec(**cfg["band"]) if "band" in cfg else BandSpec(8.0, 30.0)
        return EvalConfig(mode=cfg.get("mode", "pseudo_online"),
                          protocol=cfg.get("protocol", "within_session"),
                          cv_style=cfg.get("cv_style", "nested"),
                          train_fraction=cfg.get("train_fraction", 0.8),
                          inner_folds=cfg.get("inner_folds", 5),
                          window=window, band=band,
                          t_symbol_seconds=cfg.get("t_symbol_seconds"),
                          seed=seed if seed is not None else cfg.get("seed", 0))
    except (TypeError, ParameterError) as exc:
        raise UsageError(f"invalid evaluation config: {exc}") from None


def _datasets(cfg: dict, base: Path, seed) -> dict:
    entries = cfg.get("datasets")
    if not isinstance(entries, list) or not entries:
        raise UsageError("config needs a non-empty 'datasets' list")
    out = {}
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise UsageError(f"datasets[{i}] must be an object")
        if "synth" in entry:
            spec = _synth_spec(entry["synth"], seed)
            out[str(entry.get("id", f"synth{i}"))] = generate(spec)
        elif "index" in entry:
            dataset_id, recs = read_dataset(base / entry["index"])
            out[str(entry.get("id", dataset_id))] = recs
        else:
            raise UsageError(f"datasets[{i}] needs an 'index' path or a 'synth' spec")
    return out


def cmd_run(args) -> int:
    if not args.config:
        raise UsageError("run needs --config")
    cfg = _load_json(args.config)
    base = Path(args.config).resolve().parent
    ids = cfg.get("pipelines")
    if not isinstance(ids, list) or not ids:
        raise UsageError("config needs a non-empty 'pipelines' list")
    try:
        pipelines = get_pipelines(ids, full_aug_grid=bool(cfg.get("full_aug_grid", False)))
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    ecfg = _eval_config(cfg, args.seed)
    datasets = _datasets(cfg, base, args.seed)
    out = Path(args.out) if args.out else base / cfg.get("out", "results")
    out.mkdir(parents=True, exist_ok=True)

    res = run_benchmark(datasets, pipelines, ecfg, jobs=args.jobs)
    if res.records:
        io.write_results(res.records, out / "results.csv", "csv")
        io.write_results(res.records, out / "results.json", "json")
    (out / "skips.json").write_text(json.dumps([asdict(s) for s in res.skips], indent=1) + "\n")
    print(f"{len(res.records)} record(s), {len(res.skips)} skip(s) -> {out}")
    return 0


# ----------------------------------------------------------------- report

def summary_table(records) -> list[dict]:
    """Mean and sample std of nMCC per (dataset, protocol, pipeline), one column pair per mode."""
    groups = defaultdict(lambda: defaultdict(list))
    for r in records:
        groups[r.dataset_id, r.protocol, r.pipeline_id][r.mode].append(r.nmcc)
    modes = sorted({r.mode for r in records}, key=lambda m: (m != "offline", m))
    rows = []
    for (dataset, protocol, pipeline), by_mode in sorted(groups.items()):
        row = {"dataset": dataset, "protocol": protocol, "pipeline": pipeline}
        for m in modes:
            v = np.array(by_mode.get(m, []))
            row[f"{m}_mean"] = float(v.mean()) if v.size else None
            row[f"{m}_std"] = float(v.std(ddof=1)) if v.size > 1 else (0.0 if v.size else None)
            row[f"{m}_n"] = int(v.size)
        rows.append(row)
    return rows


def _fmt(row, mode):
    mean = row.get(f"{mode}_mean")
    if mean is None:
        return "-"
    return f"{mean:.3f} ± {row[f'{mode}_std']:.3f}"


def cmd_report(args) -> int:
    if not args.results:
        raise UsageError("report needs at least one results file")
    records = []
    for path in args.results:
        records.extend(io.read_results(path))
    if not records:
        raise FormatError("results files contain no records")
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)

    rows = summary_table(records)
    modes = sorted({r.mode for r in records}, key=lambda m: (m != "offline", m))
    if args.format == "json":
        (out / "summary.json").write_text(json.dumps(rows, indent=1) + "\n")
    else:
        with open(out / "summary.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    print(f"{'dataset':<12}{'protocol':<24}{'pipeline':<14}" + "".join(f"{m:>20}" for m in modes))
    for row in rows:
        print(f"{row['dataset']:<12}{row['protocol']:<24}{row['pipeline']:<14}"
              + "".join(f"{_fmt(row, m):>20}" for m in modes))

    by_key = defaultdict(list)
    for r in records:
        by_key[r.mode, r.protocol, r.dataset_id].append(r)
    matrices, meta = {}, {}
    per_setting = defaultdict(dict)
    for (mode, protocol, dataset), recs in sorted(by_key.items()):
        per_setting[mode, protocol][dataset] = recs
        try:
            matrices[f"{dataset}|{mode}|{protocol}"] = stats.comparison_matrix(recs)
        except ValidationError:
            continue
    for (mode, protocol), by_dataset in per_setting.items():
        meta[f"{mode}|{protocol}"] = stats.meta_analysis(by_dataset)
    doc = stats.comparison_json(matrices, meta)
    (out / "comparison.json").write_text(json.dumps(doc, indent=1) + "\n")

    with open(out / "long.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dataset", "subject", "session", "pipeline", "mode", "protocol", "score", "value"])
        for r in records:
            for name, attr in (("nmcc", "nmcc"), ("accuracy", "accuracy"), ("kappa", "kappa"),
                               ("itr", "itr_bits_per_min")):
                writer.writerow([r.dataset_id, r.subject_id, r.session_id, r.pipeline_id, r.mode,
                                 r.protocol, name, getattr(r, attr)])
    print(f"report -> {out}")
    return 0


# ------------------------------------------------------------------- main

def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("PSEUDOBENCH_JOBS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pseudobench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--config", help="JSON synth spec")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="report the pseudo-online transformation of a recording")
    p.add_argument("recording", help="recording manifest (.json)")
    p.add_argument("--window-seconds", type=float, default=2.0)
    p.add_argument("--overlap", type=float, default=0.5)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="run a benchmark from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=_default_jobs())
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="summarize results files")
    p.add_argument("results", nargs="*")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PseudoBenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
