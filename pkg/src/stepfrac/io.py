"""Trace, snapshot and event files.

Floats are written with 17 significant digits in CSV so that reading a
trace back reproduces the in-memory values bit for bit; JSON uses Python's
shortest round-trip float repr, which has the same property.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .discretization import BondState
from .metrics import TRACE_COLUMNS, JumpEvent, StepStats, TimeSeries

SNAPSHOT_COLUMNS = ("x", "v", "bond_state", "foundation_force")
_BOND_NAMES = {BondState.ABSENT: "absent", BondState.INTACT: "intact", BondState.BROKEN: "broken"}


def fmt(value: float) -> str:
    return "%.17g" % value


def _open_for_write(path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_trace(series: TimeSeries, path) -> None:
    cols = series.columns()
    with _open_for_write(path) as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for i in range(len(series)):
            fields = []
            for name in TRACE_COLUMNS:
                value = cols[name][i]
                fields.append(str(int(value)) if name == "forerun_active" else fmt(value))
            fh.write(",".join(fields) + "\n")


def read_trace(path) -> TimeSeries:
    """Read a trace CSV.

    Only ``t`` and ``apex`` are required, so traces from other simulators can
    be analysed; missing columns are filled with NaN (``forerun_active`` with
    false).
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except StopIteration:
        raise ValueError(f"{path}: empty trace file") from None
    header = [h.strip() for h in header]
    if header[:2] != ["t", "apex"]:
        raise ValueError(f"{path}: trace must start with columns t,apex, got {header[:2]}")
    data = {name: [] for name in header}
    for r in rows:
        for name, value in zip(header, r):
            data[name].append(float(value))
    n = len(rows)
    cols = {}
    for name in TRACE_COLUMNS:
        if name in data:
            cols[name] = np.array(data[name], dtype=float)
        else:
            cols[name] = np.full(n, np.nan)
    fa = cols["forerun_active"]
    cols["forerun_active"] = np.where(np.isnan(fa), 0.0, fa).astype(bool)
    return TimeSeries(**cols)


def write_snapshot(snapshot, grid, path) -> None:
    with _open_for_write(path) as fh:
        fh.write(",".join(SNAPSHOT_COLUMNS) + "\n")
        for x, v, b, f in zip(grid.x, snapshot.v, snapshot.bonds, snapshot.foundation_force):
            fh.write(f"{fmt(x)},{fmt(v)},{_BOND_NAMES[BondState(int(b))]},{fmt(f)}\n")


def jsonable(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return jsonable(obj.item())
    return obj


def write_json(doc: dict, path) -> None:
    with _open_for_write(path) as fh:
        json.dump(jsonable(doc), fh, indent=2, sort_keys=False)
        fh.write("\n")


def events_document(events: list[JumpEvent], stats: StepStats, summary: dict | None = None,
                    detector: dict | None = None) -> dict:
    doc = {"events": [e.to_dict() for e in events], "stats": stats.to_dict(), "summary": summary or {}}
    if detector is not None:
        doc["detector"] = detector
    return doc


def write_events(events: list[JumpEvent], stats: StepStats, path, summary: dict | None = None,
                 detector: dict | None = None) -> None:
    write_json(events_document(events, stats, summary, detector), path)


def read_events(path) -> tuple[list[JumpEvent], dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return [JumpEvent(**e) for e in doc["events"]], doc
