"""CSV / JSON writers for traces and sweeps.

CSV dialect: comma separated, '.' decimal point, header row, LF line
endings.  Floats are written with 12 significant digits, so reruns with the
same inputs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("t", "t_over_T", "p_marked", "p_photon", "norm")
SWEEP_COLUMNS = ("level", "mean", "std", "min", "max", "n_trials", "n_failed")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_trace_csv(trace, path) -> Path:
    path = Path(path)
    T = trace.time_unit
    rows = zip(trace.times, trace.times / T, trace.p_marked, trace.p_photon, trace.norm)
    _write_rows(path, TRACE_COLUMNS, rows)
    return path


def read_trace_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in TRACE_COLUMNS}


def trace_events(trace) -> list[dict]:
    T = trace.time_unit
    return [{"t": float(t), "t_over_T": float(t / T), "label": label}
            for t, label in trace.events]


def write_events_json(trace, path) -> Path:
    path = Path(path)
    payload = {"time_unit": trace.time_unit, "marked": trace.marked, "tier": trace.tier,
               "events": trace_events(trace)}
    write_json(payload, path)
    return path


def write_sweep_csv(summary, path) -> Path:
    path = Path(path)
    rows = ((s.level, s.mean, s.std, s.min, s.max, s.n_trials, s.n_failed)
            for s in summary.per_level)
    _write_rows(path, SWEEP_COLUMNS, rows)
    return path


def write_sweep_json(summary, path) -> Path:
    path = Path(path)
    write_json(summary.to_dict(), path)
    return path


def _default(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_json(payload, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")
    return path
