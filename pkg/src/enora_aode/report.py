"""Report serialization: JSON run records, pipe-delimited tables, result CSVs."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from .evaluation import EvalReport, SuiteRow, WtlSummary

REPORT_FORMAT = "enora-aode-report"
REPORT_VERSION = 1
# keys holding wall-clock measurements; everything else is reproducible
TIME_FIELDS = frozenset({"select_seconds", "train_seconds", "test_seconds", "build_seconds",
                         "seconds"})


def report_record(report: EvalReport, run_config: dict) -> dict:
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "run_config": run_config,
        "dataset": report.dataset,
        "n_instances": report.n_instances,
        "n_attributes": report.n_attributes,
        "n_classes": report.n_classes,
        "folds": report.k,
        "seed": report.seed,
        "pipeline": report.config,
        "aggregation": "pooled over all held-out predictions",
        "per_fold": [asdict(r) for r in report.per_fold],
        "aggregate": dict(report.aggregate),
    }


def dumps(record) -> str:
    return json.dumps(record, indent=2, sort_keys=True) + "\n"


def strip_times(record):
    """Copy of a JSON record with wall-clock fields removed."""
    if isinstance(record, dict):
        return {k: strip_times(v) for k, v in record.items() if k not in TIME_FIELDS}
    if isinstance(record, list):
        return [strip_times(v) for v in record]
    return record


def pipe_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
        if n == 0:
            lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
    return "\n".join(lines) + "\n"


def _fmt(x, spec):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(x, spec)


def fold_table(report: EvalReport) -> str:
    rows = [(r.fold, r.n_test, _fmt(100 * r.accuracy, ".2f"), _fmt(r.zero_one_loss, ".4f"),
             _fmt(r.rmse, ".4f"), r.n_selected, _fmt(r.train_seconds, ".2f"), r.selected_mask)
            for r in report.per_fold]
    agg = report.aggregate
    rows.append(("all", report.n_instances, _fmt(100 * agg["accuracy"], ".2f"),
                 _fmt(agg["zero_one_loss"], ".4f"), _fmt(agg["rmse"], ".4f"),
                 _fmt(agg["mean_selected"], ".1f"), _fmt(agg["build_seconds"], ".2f"), ""))
    head = ("Fold", "Test rows", "Accuracy in %", "0-1 loss", "RMSE", "Attributes",
            "Time in seconds", "Mask")
    return pipe_table(head, rows)


def aggregate_line(report: EvalReport) -> str:
    agg = report.aggregate
    return (f"{report.dataset}: accuracy {100 * agg['accuracy']:.2f}%  "
            f"0-1 loss {agg['zero_one_loss']:.4f}  RMSE {agg['rmse']:.4f}  "
            f"attributes {report.n_attributes} -> {agg['mean_selected']:.1f}  "
            f"time {agg['build_seconds']:.2f}s")


SUITE_COLUMNS = ("dataset", "instances", "attributes", "reduced_attributes", "seconds",
                 "accuracy", "rmse", "error")


def suite_table(rows: Sequence[SuiteRow]) -> str:
    body = [(n, r.dataset, _fmt(r.seconds, ".2f") if not r.error else "",
             _fmt(r.accuracy, ".2f"), _fmt(r.rmse, ".4f"), r.attributes or "",
             _fmt(r.reduced_attributes, ".1f") if not r.error else "", r.error)
            for n, r in enumerate(rows, 1)]
    head = ("Number", "Dataset", "Time in seconds", "Accuracy in %", "RMSE",
            "Original attributes", "Reduced attributes", "Error")
    return pipe_table(head, body)


def suite_csv(rows: Sequence[SuiteRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUITE_COLUMNS)
    for r in rows:
        writer.writerow([r.dataset, r.instances, r.attributes, _fmt(r.reduced_attributes, ".2f"),
                         _fmt(r.seconds, ".2f"), _fmt(r.accuracy, ".2f"), _fmt(r.rmse, ".4f"),
                         r.error])
    return buf.getvalue()


def suite_record(rows: Sequence[SuiteRow], run_config: dict) -> dict:
    out = []
    for r in rows:
        d = {k: getattr(r, k) for k in SUITE_COLUMNS}
        for k in ("accuracy", "rmse"):
            if isinstance(d[k], float) and math.isnan(d[k]):
                d[k] = None
        if r.report is not None:
            d["report"] = report_record(r.report, {})
        out.append(d)
    return {"format": REPORT_FORMAT + "-suite", "version": REPORT_VERSION,
            "run_config": run_config, "rows": out}


def read_results(path, metric: str = "accuracy") -> Dict[str, float]:
    """Read ``dataset -> value`` from a CSV with a ``dataset`` column.

    The value column is ``metric`` when present, otherwise the only other
    column. Rows with an empty value (failed runs) are skipped.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            raise ValueError(f"{path}: empty results file")
        fields = [f.strip() for f in reader.fieldnames]
        key = "dataset" if "dataset" in fields else fields[0]
        others = [f for f in fields if f != key]
        if metric in others:
            col = metric
        elif len(others) == 1:
            col = others[0]
        else:
            raise ValueError(f"{path}: no {metric!r} column")
        out = {}
        for row in reader:
            row = {k.strip(): (v or "").strip() for k, v in row.items() if k}
            if row.get(col):
                out[row[key]] = float(row[col])
    if not out:
        raise ValueError(f"{path}: no result rows")
    return out


def compare_table(ours: Dict[str, float], theirs: Dict[str, float], keys: List[str]) -> str:
    rows = [(k, f"{ours[k]:g}", f"{theirs[k]:g}", f"{ours[k] - theirs[k]:+.4g}") for k in keys]
    return pipe_table(("Dataset", "Ours", "Theirs", "Delta"), rows)


def wtl_line(summary: WtlSummary) -> str:
    return f"W-T-L: {summary}"
