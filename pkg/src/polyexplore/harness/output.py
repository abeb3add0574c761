"""Trace (JSON lines) and metrics (CSV) writers."""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

from ..explore import Metrics

METRICS_HEADER = ["scenario", "seed", "coverage", "final_loc_error_m", "reject_rate", "t90_s", "steps"]


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def trace_lines(trace) -> str:
    return "".join(json.dumps(r.to_dict(), separators=(",", ":")) + "\n" for r in trace)


def write_trace(path, trace) -> None:
    _atomic_write(path, trace_lines(trace))


def read_trace(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return repr(float(v))


def metrics_row(scenario: str, seed: int, m: Metrics) -> list:
    return [scenario, str(seed), _num(m.coverage), _num(m.final_loc_error_m), _num(m.reject_rate),
            _num(m.t90_s), str(m.steps)]


def write_metrics(path, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    w.writerows(rows)
    _atomic_write(path, buf.getvalue())


def read_metrics(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def write_text(path, text: str) -> None:
    _atomic_write(path, text)
