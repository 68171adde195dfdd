"""Command-line entry point: ``enora-aode {evaluate,suite,compare,prepare}``.

Exit codes: 0 success, 1 runtime or data error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from .dataset import DatasetError, discretize, load_dataset
from .evaluation import (PipelineConfig, SuiteEntry, benchmark_suite, cross_validate_pipeline,
                         win_tie_loss)
from .moea import EvaluatorConfig, MoeaConfig
from .report import (aggregate_line, compare_table, dumps, fold_table, read_results,
                     report_record, suite_csv, suite_record, suite_table, wtl_line)

log = logging.getLogger("enora_aode")

DATA_ENV = "ENORA_AODE_DATA"

DEFAULTS = {
    "class-column": None,
    "missing-token": "?",
    "bins": 10,
    "discretization": "equal_frequency",
    "algo": "aode",
    "selector": "enora",
    "pop-size": 50,
    "generations": 50,
    "slots": None,
    "inner-folds": 5,
    "subsample-cap": 2000,
    "m-threshold": 1,
    "folds": 10,
    "seed": 0,
}


class UsageError(Exception):
    pass


def _positive(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_float(text):
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _add_pipeline_flags(p):
    # defaults stay None so that config-file values are only overridden by explicit flags
    p.add_argument("--config", help="flat JSON file keyed by flag names (or a previous report)")
    p.add_argument("--class-column")
    p.add_argument("--missing-token")
    p.add_argument("--bins", type=_positive)
    p.add_argument("--discretization", choices=["equal_frequency", "equal_width"])
    p.add_argument("--algo", choices=["nb", "aode"])
    p.add_argument("--selector", choices=["none", "enora", "nsga2"])
    p.add_argument("--pop-size", type=_positive)
    p.add_argument("--generations", type=_positive)
    p.add_argument("--slots", type=_positive)
    p.add_argument("--inner-folds", type=int)
    p.add_argument("--subsample-cap", type=_positive)
    p.add_argument("--m-threshold", type=_positive)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for report files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="enora-aode", description="AODE with evolutionary feature selection: evaluate, suite, compare, prepare.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="cross-validate one dataset")
    ev.add_argument("--data")
    _add_pipeline_flags(ev)

    su = sub.add_parser("suite", help="run a benchmark suite file")
    su.add_argument("suite_file")
    _add_pipeline_flags(su)
    su.add_argument("--compare", help="results CSV to tally win-tie-loss against")
    su.add_argument("--tie-tolerance", type=_non_negative_float, default=0.0)

    co = sub.add_parser("compare", help="win-tie-loss between two results files")
    co.add_argument("ours")
    co.add_argument("theirs")
    co.add_argument("--metric", default="accuracy")
    co.add_argument("--lower-is-better", action="store_true")
    co.add_argument("--tie-tolerance", type=_non_negative_float, default=0.0)

    pr = sub.add_parser("prepare", help="discretize a dataset and write it as CSV")
    pr.add_argument("--data", required=True)
    pr.add_argument("--class-column")
    pr.add_argument("--missing-token", default="?")
    pr.add_argument("--bins", type=_positive, default=10)
    pr.add_argument("--discretization", choices=["equal_frequency", "equal_width"],
                    default="equal_frequency")
    pr.add_argument("--out", required=True, help="output CSV path")
    return parser


def _read_config(path) -> dict:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    if "run_config" in data:
        data = data["run_config"]
    return data


def effective_config(args, extra=("data",), layers=()) -> dict:
    """Defaults, then ``layers``, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    layers = list(layers)
    if getattr(args, "config", None):
        layers.append(_read_config(args.config))
    for layer in layers:
        unknown = set(layer) - set(DEFAULTS) - set(extra)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(layer)
    for key in list(DEFAULTS) + list(extra):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            cfg[key] = value
    if cfg["selector"] not in ("none", "enora", "nsga2"):
        raise UsageError(f"unknown selector {cfg['selector']!r}")
    if cfg["algo"] not in ("nb", "aode"):
        raise UsageError(f"unknown classifier {cfg['algo']!r}")
    if int(cfg["folds"]) < 2 or int(cfg["inner-folds"]) < 2:
        raise UsageError("--folds and --inner-folds must be >= 2")
    if int(cfg["pop-size"]) % 2:
        raise UsageError("--pop-size must be even")
    return cfg


def pipeline_from(cfg: dict) -> PipelineConfig:
    evaluator = EvaluatorConfig(int(cfg["inner-folds"]), int(cfg["subsample-cap"]), cfg["algo"],
                                int(cfg["m-threshold"]))
    moea = MoeaConfig(int(cfg["pop-size"]), int(cfg["generations"]),
                      "nsga2" if cfg["selector"] == "nsga2" else "enora",
                      None if cfg["slots"] is None else int(cfg["slots"]), evaluator,
                      int(cfg["seed"]))
    return PipelineConfig(cfg["selector"], cfg["algo"], int(cfg["m-threshold"]),
                          int(cfg["bins"]), cfg["discretization"], moea)


def resolve_data(path, base: Path = None) -> Path:
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    candidates = []
    if base is not None:
        candidates.append(base / p)
    if os.environ.get(DATA_ENV):
        candidates.append(Path(os.environ[DATA_ENV]) / p)
    for c in candidates:
        if c.exists():
            return c
    return p


def _write(out_dir, name, text):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def cmd_evaluate(args) -> int:
    cfg = effective_config(args)
    if not cfg.get("data"):
        raise UsageError("--data is required")
    ds = load_dataset(resolve_data(cfg["data"]), cfg["class-column"], cfg["missing-token"])
    report = cross_validate_pipeline(ds, pipeline_from(cfg), int(cfg["folds"]), int(cfg["seed"]))
    table = fold_table(report)
    if args.out:
        _write(args.out, "report.json", dumps(report_record(report, cfg)))
        _write(args.out, "report.txt", table)
    print(table, end="")
    print(aggregate_line(report))
    return 0


def load_suite(path):
    """Suite file: JSON with ``datasets`` (name, data, ...) plus shared flag keys."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, dict) or not isinstance(data.get("datasets"), list):
        raise ValueError(f"{path}: suite needs a 'datasets' list")
    entries = []
    for item in data["datasets"]:
        if isinstance(item, str):
            item = {"data": item}
        name = item.get("name") or Path(item["data"]).stem
        entries.append(SuiteEntry(name, str(resolve_data(item["data"], path.parent)),
                                  item.get("class-column"), item.get("missing-token", "?")))
    shared = {k: v for k, v in data.items() if k != "datasets"}
    return entries, shared


def cmd_suite(args) -> int:
    try:
        entries, shared = load_suite(args.suite_file)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read suite file: {exc}", file=sys.stderr)
        return 1
    cfg = effective_config(args, extra=(), layers=[shared])
    rows = benchmark_suite(entries, pipeline_from(cfg), int(cfg["folds"]), int(cfg["seed"]))
    table = suite_table(rows)
    print(table, end="")
    if args.out:
        _write(args.out, "suite.txt", table)
        _write(args.out, "suite.csv", suite_csv(rows))
        _write(args.out, "suite.json", dumps(suite_record(rows, cfg)))
    if args.compare:
        ours = {r.dataset: r.accuracy for r in rows if not r.error}
        theirs = read_results(args.compare, "accuracy")
        keys = [k for k in ours if k in theirs]
        summary = win_tie_loss([ours[k] for k in keys], [theirs[k] for k in keys], True,
                               args.tie_tolerance)
        print(wtl_line(summary) + f" over {len(keys)} datasets")
    if entries and not any(not r.error for r in rows):
        return 1
    return 0


def cmd_compare(args) -> int:
    higher = not args.lower_is_better
    try:
        ours = read_results(args.ours, args.metric)
        theirs = read_results(args.theirs, args.metric)
    except (OSError, ValueError, csv.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    missing_theirs = [k for k in ours if k not in theirs]
    missing_ours = [k for k in theirs if k not in ours]
    if missing_theirs or missing_ours:
        if missing_theirs:
            print(f"error: missing in {args.theirs}: {', '.join(missing_theirs)}", file=sys.stderr)
        if missing_ours:
            print(f"error: missing in {args.ours}: {', '.join(missing_ours)}", file=sys.stderr)
        return 1
    keys = list(ours)
    print(compare_table(ours, theirs, keys), end="")
    summary = win_tie_loss([ours[k] for k in keys], [theirs[k] for k in keys], higher,
                           args.tie_tolerance)
    print(wtl_line(summary))
    return 0


def cmd_prepare(args) -> int:
    ds = load_dataset(resolve_data(args.data), args.class_column, args.missing_token)
    ds = discretize(ds, args.discretization, args.bins)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([a.name for a in ds.attributes] + [ds.class_spec.name])
        for row, y in zip(ds.codes, ds.y):
            writer.writerow([ds.attributes[j].values[v] if v >= 0 else args.missing_token
                             for j, v in enumerate(row)] + [ds.class_spec.values[y]])
    print(f"wrote {ds.n_instances} rows to {out}")
    return 0


COMMANDS = {"evaluate": cmd_evaluate, "suite": cmd_suite, "compare": cmd_compare,
            "prepare": cmd_prepare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
