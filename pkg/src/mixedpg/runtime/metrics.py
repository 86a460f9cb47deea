from __future__ import annotations

import csv
import math
from pathlib import Path

from .core import METRIC_COLUMNS


def _fmt(v) -> str:
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


class MetricLog:
    """Append-only CSV of evaluation rows (flushed per row)."""

    def __init__(self, path, columns=METRIC_COLUMNS):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = tuple(columns)
        with open(self.path, "w", newline="") as fh:
            csv.writer(fh).writerow(self.columns)

    def write(self, row: dict) -> None:
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow([_fmt(row[c]) for c in self.columns])


def write_metrics(path, rows, columns=METRIC_COLUMNS) -> None:
    log = MetricLog(path, columns)
    for r in rows:
        log.write(r)


def read_metrics(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = []
        for r in csv.DictReader(fh):
            rows.append({k: (int(v) if k == "iteration" else float(v)) for k, v in r.items()})
        return rows
