"""Single runs, refinement sweeps and the convergence check built on them."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .dynamics import RunResult, run
from .errors import ConfigError
from . import metrics


@dataclass
class Outcome:
    """A finished (or diverged) run together with its jump analysis."""

    config: RunConfig
    result: RunResult
    events: list[metrics.JumpEvent]
    stats: metrics.StepStats
    summary: dict
    s_min: float

    @property
    def diverged(self) -> bool:
        return self.result.error is not None

    def detector_settings(self) -> dict:
        det = self.config.detector
        return {
            "s_min": self.s_min,
            "window": det.window,
            "cv_threshold": det.cv_threshold,
            "eps_cz": det.eps_cz,
            "velocity_window": det.velocity_window,
        }


def analyze_series(series: metrics.TimeSeries, s_min: float, window: float = metrics.DEFAULT_WINDOW,
                   cv_threshold: float = metrics.DEFAULT_CV_THRESHOLD):
    events = metrics.detect_jumps(series.t, series.apex, s_min, window, series.forerun_active)
    return events, metrics.step_stats(events, cv_threshold)


def execute(config: RunConfig, t_stop: float | None = None) -> Outcome:
    """Run one simulation and analyse it.

    Divergence does not raise here; the outcome carries the partial trace
    and ``result.error``.
    """
    det = config.detector
    result = run(
        config.beam, config.law, config.load,
        N=config.N, t_end=config.t_end, dt_safety=config.dt_safety,
        output_every=config.output_every, snapshot_times=config.snapshot_times,
        eps_cz=det.eps_cz, velocity_window=det.velocity_window,
        raise_on_divergence=False, t_stop=t_stop,
    )
    s_min = det.resolve_s_min(result.grid.h)
    events, stats = analyze_series(result.series, s_min, det.window, det.cv_threshold)
    summary = metrics.run_summary(result.series, events, config.law, result.grid.h, config.beam.L0,
                                  det.cv_threshold)
    summary.update(N=config.N, dt=result.control.dt, dt_safety=config.dt_safety,
                   n_steps=result.control.n_steps, cv_intervals=stats.cv_intervals,
                   cv_step_sizes=stats.cv_step_sizes, diverged=result.error is not None)
    if result.error is not None:
        summary["divergence"] = {"step_index": result.error.step_index, "t": result.error.t}
    return Outcome(config, result, events, stats, summary, s_min)


# -- refinement sweeps -------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    """A base configuration and the ``(N, dt_safety)`` levels to run it at.

    Levels are stored sorted by increasing ``N`` and, for equal ``N``, by
    decreasing ``dt_safety``, so the last level is always the finest.
    """

    base: RunConfig
    levels: tuple[tuple[int, float], ...]

    def __post_init__(self):
        levels = tuple(sorted(((int(n), float(s)) for n, s in self.levels), key=lambda l: (l[0], -l[1])))
        if len(levels) < 2:
            raise ConfigError("a sweep needs at least 2 levels", key="levels")
        for n, s in levels:
            self.base.with_level(n, s)  # validates
        object.__setattr__(self, "levels", levels)

    def level_config(self, index: int) -> RunConfig:
        n, s = self.levels[index]
        return self.base.with_level(n, s)


@dataclass
class LevelResult:
    index: int
    N: int
    dt_safety: float
    summary: dict
    t: np.ndarray
    apex: np.ndarray
    x: np.ndarray
    v_final: np.ndarray
    error: str | None = None


@dataclass
class SweepResult:
    plan: SweepPlan
    levels: list[LevelResult]
    comparisons: list[dict] = field(default_factory=list)

    @property
    def event_counts(self) -> list[int]:
        return [lv.summary["n_events"] for lv in self.levels]

    def table(self) -> list[dict]:
        """One row per level: its summary numbers plus the deltas to the previous level."""
        rows = []
        for lv in self.levels:
            cmp = self.comparisons[lv.index - 1] if lv.index > 0 else {}
            rows.append({
                "level": lv.index,
                "N": lv.N,
                "dt_safety": lv.dt_safety,
                "dt": lv.summary["dt"],
                "n_events": lv.summary["n_events"],
                "classification": lv.summary["classification"],
                "t_init": lv.summary["t_init"],
                "final_apex": lv.summary["final_apex"],
                "max_dapex_vs_prev": cmp.get("max_abs_dapex"),
                "max_dv_final_vs_prev": cmp.get("max_abs_dv_final"),
                "dn_events_vs_prev": cmp.get("dn_events"),
                "error": lv.error,
            })
        return rows

    def to_dict(self) -> dict:
        return {
            "levels": [{"level": lv.index, "N": lv.N, "dt_safety": lv.dt_safety, "summary": lv.summary,
                        "error": lv.error} for lv in self.levels],
            "comparisons": self.comparisons,
            "event_counts": self.event_counts,
            "table": self.table(),
        }


def _run_level(args) -> LevelResult:
    plan, index = args
    outcome = execute(plan.level_config(index))
    res = outcome.result
    n, s = plan.levels[index]
    err = None if res.error is None else str(res.error)
    return LevelResult(index=index, N=n, dt_safety=s, summary=outcome.summary,
                       t=res.series.t.copy(), apex=res.series.apex.copy(),
                       x=np.asarray(res.grid.x).copy(), v_final=res.state.v.copy(), error=err)


def max_apex_deviation(t_coarse, apex_coarse, t_fine, apex_fine) -> float:
    """Max ``|Δapex|`` with the finer history interpolated onto the coarser output times."""
    t_coarse = np.asarray(t_coarse, dtype=float)
    t_fine = np.asarray(t_fine, dtype=float)
    if len(t_coarse) == 0 or len(t_fine) == 0:
        return math.nan
    keep = t_coarse <= t_fine[-1]
    if not keep.any():
        return math.nan
    fine_on_coarse = np.interp(t_coarse[keep], t_fine, apex_fine)
    return float(np.max(np.abs(np.asarray(apex_coarse)[keep] - fine_on_coarse)))


def restrict(x_fine, v_fine, x_coarse) -> np.ndarray:
    """Sample a fine-grid field at coarse nodes (exact when the grids nest)."""
    x_fine = np.asarray(x_fine)
    x_coarse = np.asarray(x_coarse)
    n_f, n_c = len(x_fine) - 1, len(x_coarse) - 1
    if n_f % n_c == 0:
        return np.asarray(v_fine)[:: n_f // n_c]
    return np.interp(x_coarse, x_fine, v_fine)


def compare_levels(coarse: LevelResult, fine: LevelResult) -> dict:
    dv = restrict(fine.x, fine.v_final, coarse.x) - coarse.v_final
    return {
        "coarse": coarse.index,
        "fine": fine.index,
        "max_abs_dapex": max_apex_deviation(coarse.t, coarse.apex, fine.t, fine.apex),
        "max_abs_dv_final": float(np.max(np.abs(dv))) if np.all(np.isfinite(dv)) else math.nan,
        "dn_events": fine.summary["n_events"] - coarse.summary["n_events"],
    }


def run_sweep(plan: SweepPlan, workers: int = 1, order=None) -> SweepResult:
    """Run every level of ``plan`` and compare consecutive levels.

    Levels are independent; with ``workers > 1`` they run in separate
    processes. ``order`` only changes the execution order (used to check
    that merging is order independent). A diverging level is recorded in
    its ``error`` field and the sweep carries on.
    """
    indices = list(range(len(plan.levels))) if order is None else list(order)
    if sorted(indices) != list(range(len(plan.levels))):
        raise ValueError("order must be a permutation of the level indices")
    jobs = [(plan, i) for i in indices]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_level, jobs))
    else:
        done = [_run_level(j) for j in jobs]
    levels = sorted(done, key=lambda lv: lv.index)
    comparisons = [compare_levels(levels[i], levels[i + 1]) for i in range(len(levels) - 1)]
    return SweepResult(plan=plan, levels=levels, comparisons=comparisons)


# -- convergence -------------------------------------------------------------


def richardson_ratio(v_coarse, v_mid, v_fine) -> tuple[float, float, float]:
    """Error ratio for three fields on nested grids ``N``, ``2N``, ``4N``.

    Returns ``(e1, e2, e1 / e2)`` where ``e1 = max|v_N - v_2N|`` and
    ``e2 = max|v_2N - v_4N|``, both sampled at the coarse nodes. A
    second-order scheme gives a ratio near 4.
    """
    n_c = len(v_coarse) - 1
    v_mid = np.asarray(v_mid)[:: (len(v_mid) - 1) // n_c]
    v_fine = np.asarray(v_fine)[:: (len(v_fine) - 1) // n_c]
    e1 = float(np.max(np.abs(np.asarray(v_coarse) - v_mid)))
    e2 = float(np.max(np.abs(v_mid - v_fine)))
    return e1, e2, e1 / e2 if e2 > 0 else math.inf


def convergence_study(config: RunConfig, Ns=(500, 1000, 2000)) -> dict:
    """Final-time fields at ``N``, ``2N``, ``4N`` and their Richardson ratio."""
    Ns = tuple(Ns)
    if len(Ns) != 3 or Ns[1] != 2 * Ns[0] or Ns[2] != 2 * Ns[1]:
        raise ValueError(f"need three nested resolutions N, 2N, 4N, got {Ns}")
    fields = []
    for n in Ns:
        c = config.with_level(n, config.dt_safety)
        res = run(c.beam, c.law, c.load, N=n, t_end=c.t_end, dt_safety=c.dt_safety,
                  output_every=max(1, c.output_every))
        fields.append(res.state.v.copy())
    e1, e2, ratio = richardson_ratio(*fields)
    return {"N": list(Ns), "e1": e1, "e2": e2, "ratio": ratio, "fields": fields}


__all__ = [
    "Outcome", "analyze_series", "execute", "SweepPlan", "LevelResult", "SweepResult", "run_sweep",
    "max_apex_deviation", "restrict", "compare_levels", "richardson_ratio", "convergence_study",
]
