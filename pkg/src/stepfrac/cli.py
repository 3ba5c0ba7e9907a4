"""Command-line entry point: ``stepfrac {run,sweep,analyze,snapshot}``.

Exit codes: 0 success, 1 usage or configuration error, 2 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import ConfigError
from .experiments import SweepPlan, analyze_series, execute, run_sweep
from . import io, metrics

log = logging.getLogger("stepfrac")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def snapshot_filename(t: float) -> str:
    return f"t_{t!r}.csv"


# -- subcommands -------------------------------------------------------------


def cmd_run(args) -> int:
    config = load_config(args.config)
    out = Path(args.out)
    outcome = execute(config)
    res = outcome.result
    detector = outcome.detector_settings()

    io.write_trace(res.series, out / "trace.csv")
    io.write_events(outcome.events, outcome.stats, out / "events.json", outcome.summary, detector)
    io.write_json(outcome.summary, out / "summary.json")
    io.write_json(config.to_dict(), out / "config.json")
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for ts in config.snapshot_times:
        step = int(round(ts / res.control.dt))
        for snap in res.snapshots:
            if snap.step_index == step:
                io.write_snapshot(snap, res.grid, snap_dir / snapshot_filename(ts))

    log.info("run: N=%d dt=%.4g events=%d classification=%s", config.N, res.control.dt,
             outcome.stats.n_events, outcome.stats.classification.value)
    if res.error is not None:
        print(f"diverged: {res.error}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _read_levels(path) -> list[tuple[int, float]]:
    """Levels file: ``[[N, dt_safety], ...]`` or ``{"levels": [...]}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read levels file {path}: {exc}", key="levels") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed levels file {path}: {exc}", key="levels") from exc
    if isinstance(doc, dict):
        doc = doc.get("levels")
    if not isinstance(doc, list):
        raise ConfigError("levels file must hold a list of [N, dt_safety] pairs", key="levels")
    levels = []
    for item in doc:
        if isinstance(item, dict):
            item = [item.get("N"), item.get("dt_safety")]
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], int)
                and isinstance(item[1], (int, float))):
            raise ConfigError(f"bad level entry {item!r}; expected [N, dt_safety]", key="levels")
        levels.append((item[0], float(item[1])))
    return levels


def cmd_sweep(args) -> int:
    base = load_config(args.config)
    plan = SweepPlan(base=base, levels=tuple(_read_levels(args.levels)))
    result = run_sweep(plan, workers=args.workers)
    out = Path(args.out)
    io.write_json(result.to_dict(), out / "sweep.json")
    table = result.table()
    with open(out / "sweep_table.csv", "w", encoding="utf-8", newline="") as fh:
        cols = list(table[0])
        fh.write(",".join(cols) + "\n")
        for row in table:
            cells = []
            for c in cols:
                v = row[c]
                cells.append("" if v is None else io.fmt(v) if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")
    for lv in result.levels:
        log.info("level %d: N=%d dt_safety=%g events=%d%s", lv.index, lv.N, lv.dt_safety,
                 lv.summary["n_events"], " DIVERGED" if lv.error else "")
    if any(lv.error for lv in result.levels):
        print("one or more levels diverged; see sweep.json", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def infer_s_min(trace_path: Path, series: metrics.TimeSeries) -> float | None:
    """Default threshold for ``analyze``.

    Prefers the detector settings stored in a sibling ``events.json``;
    otherwise assumes apex moves on a grid and uses ``10 h`` with ``h`` the
    smallest positive apex increment. ``None`` when the apex never moves.
    """
    sibling = trace_path.parent / "events.json"
    if sibling.exists():
        try:
            _, doc = io.read_events(sibling)
            s_min = doc.get("detector", {}).get("s_min")
            if s_min:
                return float(s_min)
        except (OSError, ValueError, KeyError, TypeError):
            pass
    inc = np.diff(series.apex)
    inc = inc[inc > 0]
    if inc.size == 0:
        return None
    return metrics.default_s_min(float(inc.min()))


def cmd_analyze(args) -> int:
    trace_path = Path(args.trace)
    try:
        series = io.read_trace(trace_path)
    except ValueError as exc:
        raise ConfigError(str(exc), key="trace") from exc
    if args.s_min is not None and not args.s_min > 0:
        raise ConfigError("--s-min must be positive", key="s_min")
    if not args.window > 0:
        raise ConfigError("--window must be positive", key="window")
    s_min = args.s_min if args.s_min is not None else infer_s_min(trace_path, series)
    if s_min is None:
        events, stats = [], metrics.step_stats([], args.cv_threshold)
    else:
        events, stats = analyze_series(series, s_min, args.window, args.cv_threshold)
    detector = {"s_min": s_min, "window": args.window, "cv_threshold": args.cv_threshold}
    summary = {"n_samples": len(series), "t_first": float(series.t[0]) if len(series) else None,
               "t_last": float(series.t[-1]) if len(series) else None,
               "final_apex": float(series.apex[-1]) if len(series) else None}
    io.write_events(events, stats, args.out, summary, detector)
    log.info("analyze: %d events, %s", stats.n_events, stats.classification.value)
    return EXIT_OK


def cmd_snapshot(args) -> int:
    """Write the profile at ``--time`` from a run directory.

    A snapshot saved by ``run`` is copied; otherwise the run is repeated from
    its ``config.json`` up to that time. The integration is deterministic, so
    both routes give the same numbers.
    """
    run_dir = Path(args.run)
    saved = run_dir / "snapshots" / snapshot_filename(args.time)
    out = Path(args.out)
    if saved.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_bytes(saved.read_bytes())
        return EXIT_OK
    config = load_config(run_dir / "config.json")
    if not 0 <= args.time <= config.t_end:
        raise ConfigError(f"--time {args.time} outside [0, {config.t_end}]", key="time")
    from dataclasses import replace

    config = replace(config, snapshot_times=(args.time,))
    outcome = execute(config, t_stop=args.time)
    res = outcome.result
    if res.error is not None or not res.snapshots:
        print(f"diverged before t = {args.time}: {res.error}", file=sys.stderr)
        return EXIT_DIVERGED
    io.write_snapshot(res.snapshots[0], res.grid, out)
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stepfrac", description="Beam-on-breakable-foundation crack simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one simulation")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="refinement study over (N, dt_safety) levels")
    p.add_argument("--config", required=True)
    p.add_argument("--levels", required=True, help='JSON file, e.g. [[500, 0.5], [1000, 0.5]]')
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="jump detection on an existing trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True, help="events JSON path")
    p.add_argument("--s-min", type=float, default=None, dest="s_min")
    p.add_argument("--window", type=float, default=metrics.DEFAULT_WINDOW)
    p.add_argument("--cv-threshold", type=float, default=metrics.DEFAULT_CV_THRESHOLD, dest="cv_threshold")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("snapshot", help="profile at a given time from a saved run")
    p.add_argument("--run", required=True, help="run output directory")
    p.add_argument("--time", type=float, required=True)
    p.add_argument("--out", required=True, help="snapshot CSV path")
    p.set_defaults(func=cmd_snapshot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
