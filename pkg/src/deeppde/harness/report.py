"""CSV emission and rate summaries for sweep records."""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from ..evaluation import RateFit, fit_line, fit_rate
from .sweep import SweepRecord

log = logging.getLogger(__name__)

RECORD_COLUMNS = [f.name for f in fields(SweepRecord)]
AVERAGE_COLUMNS = ["method", "model", "param", "value", "order", "n_seeds", "l2_error", "train_seconds"]
RATE_COLUMNS = ["method", "model", "param", "slope", "intercept", "r_squared", "n_points"]

FILES = {
    "records": "records.csv",
    "averaged": "averaged.csv",
    "rates": "rates.csv",
    "timing": "timing.csv",
    "table": "summary.txt",
}


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def records_csv(records) -> str:
    rows = sorted(records, key=SweepRecord.sort_key)
    return _csv(RECORD_COLUMNS, ([getattr(r, c) for c in RECORD_COLUMNS] for r in rows))


def read_records(path) -> list[SweepRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RECORD_COLUMNS:
            raise ValueError(f"{path}: expected columns {RECORD_COLUMNS}, got {reader.fieldnames}")
        for row in reader:
            out.append(SweepRecord(
                row["method"], row["model"], row["param"], int(row["value"]), int(row["order"]),
                int(row["seed"]), float(row["l2_error"]), float(row["train_seconds"]), row["status"],
            ))
    return out


@dataclass(frozen=True)
class AveragedRow:
    method: str
    model: str
    param: str
    value: int
    order: int
    n_seeds: int
    l2_error: float
    train_seconds: float


def average(records) -> list[AveragedRow]:
    """Seed averages over successful runs, one row per parameter value."""
    groups = defaultdict(list)
    for r in records:
        if r.ok:
            groups[(r.method, r.model, r.param, r.order, r.value)].append(r)
    rows = []
    for (method, model, param, order, value), rs in sorted(groups.items()):
        rs = sorted(rs, key=lambda r: r.seed)
        rows.append(AveragedRow(
            method, model, param, value, order, len(rs),
            float(np.mean([r.l2_error for r in rs])), float(np.mean([r.train_seconds for r in rs])),
        ))
    return rows


def method_label(method: str, order: int) -> str:
    """Rate tables carry no order column; second-order TDGF is labelled ``tdgf_o2``."""
    return f"{method}_o2" if method == "tdgf" and order == 2 else method


def _series(rows):
    series = defaultdict(list)
    for row in rows:
        series[(row.method, row.model, row.param, row.order)].append(row)
    return sorted(series.items())


def rate_fits(rows) -> list[tuple[str, str, str, RateFit]]:
    """Log-log error fits per series; series with fewer than three values are skipped."""
    out = []
    for (method, model, param, order), rs in _series(rows):
        if len(rs) < 3:
            log.warning("%s/%s/%s: %d values, rate fit omitted", method, model, param, len(rs))
            continue
        fit = fit_rate([r.value for r in rs], [r.l2_error for r in rs])
        out.append((method_label(method, order), model, param, fit))
    return out


def time_fits(rows) -> list[tuple[str, str, str, RateFit]]:
    """Linear fits of seed-averaged training time against the parameter value."""
    out = []
    for (method, model, param, order), rs in _series(rows):
        if len(rs) < 3:
            log.warning("%s/%s/%s: %d values, time fit omitted", method, model, param, len(rs))
            continue
        fit = fit_line([r.value for r in rs], [r.train_seconds for r in rs])
        out.append((method_label(method, order), model, param, fit))
    return out


def _fit_rows(fits):
    return [(m, mo, p, f.slope, f.intercept, f.r_squared, f.n_points) for m, mo, p, f in fits]


def summary_table(rates, times) -> str:
    """Fixed-width text table of convergence rates and time slopes."""
    lines = [f"{'method':<8} {'model':<14} {'param':<16} {'rate':>8} {'r2':>6} {'s/unit':>10} {'r2':>6}"]
    tmap = {(m, mo, p): f for m, mo, p, f in times}
    for m, mo, p, f in rates:
        t = tmap.get((m, mo, p))
        ts = f"{t.slope:>10.4g} {t.r_squared:>6.3f}" if t else f"{'-':>10} {'-':>6}"
        lines.append(f"{m:<8} {mo:<14} {p:<16} {f.slope:>8.3f} {f.r_squared:>6.3f} {ts}")
    return "\n".join(lines) + "\n"


def write_report(records, directory) -> dict[str, Path]:
    """Write records, seed averages, rate fits, time fits and the text table."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = average(records)
    rates, times = rate_fits(rows), time_fits(rows)
    texts = {
        "records": records_csv(records),
        "averaged": _csv(AVERAGE_COLUMNS, ([getattr(r, c) for c in AVERAGE_COLUMNS] for r in rows)),
        "rates": _csv(RATE_COLUMNS, _fit_rows(rates)),
        "timing": _csv(RATE_COLUMNS, _fit_rows(times)),
        "table": summary_table(rates, times),
    }
    paths = {}
    for key, text in texts.items():
        paths[key] = directory / FILES[key]
        paths[key].write_text(text)
    return paths
