"""Parameter calibration by plain grid search.

``v_max`` is chosen so that the arctan-ramp run starts cracking closest to
a target time; the sinusoid amplitude and frequency are chosen to give the
most regular train of jump events. Both searches are deterministic and
cheap enough to rerun::

    python -m stepfrac.calibration v_max configs/fig2.json
    python -m stepfrac.calibration sinusoid configs/sinusoid.json
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from .config import RunConfig, load_config
from .constitutive import LoadKind, LoadModel
from .experiments import execute
from .io import jsonable

DEFAULT_V_MAX_GRID = tuple(np.round(np.arange(0.005, 0.01501, 0.0005), 6))
DEFAULT_T_INIT_TARGET = 10.0


def calibrate_v_max(base: RunConfig, grid=DEFAULT_V_MAX_GRID, target: float = DEFAULT_T_INIT_TARGET,
                    t_stop: float | None = None) -> dict:
    """Return the grid value of ``v_max`` whose initiation time is closest to ``target``.

    Each candidate is only integrated up to ``t_stop`` (default ``2 * target``)
    since nothing after initiation matters here. Ties go to the smaller value.
    """
    t_stop = min(base.t_end, 2.0 * target if t_stop is None else t_stop)
    rows = []
    for v_max in grid:
        cfg = replace(base, law=replace(base.law, v_max=float(v_max)))
        t_init = execute(cfg, t_stop=t_stop).summary["t_init"]
        rows.append({"v_max": float(v_max), "t_init": t_init})
    scored = [r for r in rows if r["t_init"] is not None]
    if not scored:
        raise RuntimeError(f"no candidate initiated before t = {t_stop}")
    best = min(scored, key=lambda r: (abs(r["t_init"] - target), r["v_max"]))
    return {"target": target, "t_stop": t_stop, "candidates": rows, "chosen": best}


def calibrate_sinusoid(base: RunConfig, amplitudes, omegas) -> dict:
    """Grid search for the most periodic jump train.

    Candidates with at least three events and a Regular verdict are ranked
    by event count (more events are stronger evidence of periodicity), then
    by ``cv_intervals``. If none qualifies, the run with the lowest
    ``cv_intervals`` among those with at least three events is reported
    instead, with ``regular_found`` false.
    """
    rows = []
    for a in amplitudes:
        for om in omegas:
            cfg = replace(base, load=LoadModel(kind=LoadKind.SINUSOID, amplitude=float(a), omega=float(om)))
            s = execute(cfg).summary
            rows.append({"amplitude": float(a), "omega": float(om), "n_events": s["n_events"],
                         "cv_intervals": s["cv_intervals"], "classification": s["classification"]})
    multi = [r for r in rows if r["n_events"] >= 3]
    regular = [r for r in multi if r["classification"] == "Regular"]
    if regular:
        best = min(regular, key=lambda r: (-r["n_events"], r["cv_intervals"]))
    elif multi:
        best = min(multi, key=lambda r: r["cv_intervals"])
    else:
        best = None
    return {"candidates": rows, "chosen": best, "regular_found": bool(regular)}


def _span(text: str) -> list[float]:
    lo, hi, n = text.split(":")
    return [float(v) for v in np.round(np.linspace(float(lo), float(hi), int(n)), 12)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="python -m stepfrac.calibration", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="what", required=True)
    p = sub.add_parser("v_max", help="calibrate v_max against the initiation time")
    p.add_argument("config")
    p.add_argument("--target", type=float, default=DEFAULT_T_INIT_TARGET)
    p.add_argument("--grid", type=_span, help="lo:hi:count (default 0.005:0.015:21)")
    p = sub.add_parser("sinusoid", help="calibrate sinusoid amplitude and frequency")
    p.add_argument("config")
    p.add_argument("--amplitudes", type=_span, required=True, help="lo:hi:count")
    p.add_argument("--omegas", type=_span, required=True, help="lo:hi:count")
    args = parser.parse_args(argv)

    base = load_config(args.config)
    if args.what == "v_max":
        out = calibrate_v_max(base, args.grid or DEFAULT_V_MAX_GRID, args.target)
    else:
        out = calibrate_sinusoid(base, args.amplitudes, args.omegas)
    json.dump(jsonable(out), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
