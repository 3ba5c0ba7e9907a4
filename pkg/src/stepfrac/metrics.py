"""Crack apex, forerunning, cohesive zone, tip velocity and jump statistics.

Everything here is a pure function of bond arrays or recorded traces, so it
applies equally to live states and to traces read back from disk.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .discretization import BondState, Grid

DEFAULT_WINDOW = 0.5
DEFAULT_VELOCITY_WINDOW = 11
DEFAULT_EPS_CZ = 0.01
DEFAULT_CV_THRESHOLD = 0.2
S_MIN_PER_H = 10.0

TRACE_COLUMNS = (
    "t", "apex", "forerun_front", "forerun_active", "cz_start", "cz_end", "tip_velocity",
    "E_kin", "E_bend", "E_found", "E_frac", "W_ext", "balance_residual",
)


class Classification(str, Enum):
    REGULAR = "Regular"
    IRREGULAR = "Irregular"
    SINGLE_EVENT = "SingleEvent"
    NO_EVENTS = "NoEvents"


@dataclass
class TimeSeries:
    """Column-oriented crack trace; one array per column of :data:`TRACE_COLUMNS`."""

    t: np.ndarray
    apex: np.ndarray
    forerun_front: np.ndarray
    forerun_active: np.ndarray
    cz_start: np.ndarray
    cz_end: np.ndarray
    tip_velocity: np.ndarray
    E_kin: np.ndarray
    E_bend: np.ndarray
    E_found: np.ndarray
    E_frac: np.ndarray
    W_ext: np.ndarray
    balance_residual: np.ndarray

    @classmethod
    def from_rows(cls, rows, velocity_window: int = DEFAULT_VELOCITY_WINDOW) -> "TimeSeries":
        """Build from ``(t, apex, front, active, cz_start, cz_end, 6 energy terms)`` tuples."""
        arr = np.array(rows, dtype=float).reshape(-1, 12)
        t, apex = arr[:, 0], arr[:, 1]
        if len(t) >= velocity_window:
            vel = tip_velocity(t, apex, velocity_window)
        else:
            vel = np.full(len(t), np.nan)
        cols = [arr[:, i] for i in range(12)]
        cols[3] = cols[3].astype(bool)
        return cls(*cols[:6], vel, *cols[6:])

    def __len__(self) -> int:
        return len(self.t)

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRACE_COLUMNS}


@dataclass(frozen=True)
class JumpEvent:
    t_start: float
    t_end: float
    length_before: float
    length_after: float
    step_size: float
    forerunning_involved: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class StepStats:
    n_events: int
    cv_intervals: float
    cv_step_sizes: float
    classification: Classification

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification"] = self.classification.value
        return d


def compute_apex(grid: Grid, bonds: np.ndarray) -> float:
    """Position of the first intact bond at or beyond the notch (``L`` if none)."""
    intact = np.flatnonzero(bonds[grid.i_notch:] == BondState.INTACT)
    if intact.size == 0:
        return float(grid.x[-1])
    return float(grid.x[grid.i_notch + intact[0]])


def detect_forerunning(grid: Grid, bonds: np.ndarray) -> tuple[bool, float]:
    """Whether a broken segment lies beyond the first intact bond, and its far edge."""
    sub = bonds[grid.i_notch:]
    broken = np.flatnonzero(sub == BondState.BROKEN)
    intact = np.flatnonzero(sub == BondState.INTACT)
    apex = float(grid.x[grid.i_notch + intact[0]]) if intact.size else float(grid.x[-1])
    if broken.size == 0:
        return False, apex
    front = float(grid.x[grid.i_notch + broken[-1]])
    active = bool(intact.size and broken[-1] > intact[0])
    return active, front


def cohesive_zone(grid: Grid, law, bonds: np.ndarray, v: np.ndarray, eps_cz: float = DEFAULT_EPS_CZ):
    """Extent of the loaded intact ligament just ahead of the apex.

    The zone runs from the apex over consecutive intact nodes whose opening
    exceeds ``eps_cz * v_max``.
    """
    intact = np.flatnonzero(bonds[grid.i_notch:] == BondState.INTACT)
    if intact.size == 0:
        L = float(grid.x[-1])
        return L, L
    i0 = grid.i_notch + intact[0]
    start = float(grid.x[i0])
    loaded = (bonds[i0 + 1:] == BondState.INTACT) & (v[i0 + 1:] > eps_cz * law.v_max)
    stop = np.flatnonzero(~loaded)
    n = stop[0] if stop.size else loaded.size
    return start, float(grid.x[i0 + n])


def tip_velocity(t, apex, window: int = DEFAULT_VELOCITY_WINDOW) -> np.ndarray:
    """Least-squares slope of apex over a sliding window of samples.

    Interior samples use a centred window; the first and last
    ``window // 2`` samples reuse the nearest full window.
    """
    t = np.asarray(t, dtype=float)
    apex = np.asarray(apex, dtype=float)
    if window < 3 or window % 2 == 0:
        raise ValueError(f"velocity window must be odd and >= 3, got {window}")
    if len(t) < window:
        raise ValueError(f"need at least {window} samples for the velocity window, got {len(t)}")
    tw = sliding_window_view(t, window)
    aw = sliding_window_view(apex, window)
    tc = tw - tw.mean(axis=1, keepdims=True)
    ac = aw - aw.mean(axis=1, keepdims=True)
    slopes = (tc * ac).sum(axis=1) / (tc * tc).sum(axis=1)
    half = window // 2
    return np.concatenate([np.full(half, slopes[0]), slopes, np.full(half, slopes[-1])])


def default_s_min(h: float) -> float:
    return S_MIN_PER_H * h


def detect_jumps(t, apex, s_min: float, w: float = DEFAULT_WINDOW, forerun_active=None) -> list[JumpEvent]:
    """Find sudden crack advances.

    Growth is first split into bursts: runs of apex gains with no pause
    longer than ``w``. A burst becomes an event when some window of duration
    ``w`` inside it gains at least ``s_min``; the event then spans from the
    first to the last gain covered by such windows. Because bursts do not
    depend on ``s_min``, raising the threshold can only drop events.

    Gains are measured on the running maximum of ``apex`` so that a receding
    apex (literal-mode healing) does not count twice.
    """
    t = np.asarray(t, dtype=float)
    a = np.maximum.accumulate(np.asarray(apex, dtype=float)) if len(apex) else np.asarray(apex, dtype=float)
    if s_min <= 0 or w <= 0:
        raise ValueError("s_min and w must be positive")
    n = len(t)
    if n < 2:
        return []
    fore = np.zeros(n, dtype=bool) if forerun_active is None else np.asarray(forerun_active, dtype=bool)

    gains = np.flatnonzero(a[1:] > a[:-1]) + 1
    if gains.size == 0:
        return []

    # Window ending at sample i covers samples j(i)..i with t[j] >= t[i] - w;
    # its gain is the sum of increments at samples g with j(i) < g <= i.
    j_of = np.searchsorted(t, t - w, side="left")
    ends = np.flatnonzero((a - a[j_of]) >= s_min)
    if ends.size == 0:
        return []
    first_gain = np.searchsorted(gains, j_of[ends], side="right")
    last_gain = np.searchsorted(gains, ends, side="right") - 1

    # Bursts: gain samples separated by more than w start a new burst. A
    # window of length w cannot straddle two bursts.
    burst_of = np.concatenate([[0], np.cumsum(np.diff(t[gains]) > w)])
    win_burst = burst_of[last_gain]

    events = []
    for b in np.unique(win_burst):
        sel = win_burst == b
        p = gains[first_gain[sel].min()]
        r = gains[last_gain[sel].max()]
        events.append(JumpEvent(
            t_start=float(t[p - 1]),
            t_end=float(t[r]),
            length_before=float(a[p - 1]),
            length_after=float(a[r]),
            step_size=float(a[r] - a[p - 1]),
            forerunning_involved=bool(fore[p - 1:r + 1].any()),
        ))
    return events


def _cv(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return 0.0
    mean = values.mean()
    if mean == 0:
        return 0.0
    return float(values.std() / abs(mean))


def step_stats(events: list[JumpEvent], cv_threshold: float = DEFAULT_CV_THRESHOLD) -> StepStats:
    """Population coefficients of variation and the regular/irregular verdict."""
    n = len(events)
    starts = np.array([e.t_start for e in events], dtype=float)
    cv_int = _cv(np.diff(starts)) if n >= 2 else 0.0
    cv_size = _cv([e.step_size for e in events])
    if n == 0:
        cls = Classification.NO_EVENTS
    elif n <= 2:
        cls = Classification.SINGLE_EVENT
    elif cv_int < cv_threshold:
        cls = Classification.REGULAR
    else:
        cls = Classification.IRREGULAR
    return StepStats(n_events=n, cv_intervals=cv_int, cv_step_sizes=cv_size, classification=cls)


def run_summary(series: TimeSeries, events: list[JumpEvent], law, h: float, L0: float,
                cv_threshold: float = DEFAULT_CV_THRESHOLD) -> dict:
    """Headline numbers for one run."""
    stats = step_stats(events, cv_threshold)
    grown = np.flatnonzero(series.apex > L0 + 0.5 * h)
    t_init = float(series.t[grown[0]]) if grown.size else None
    w_max = float(np.max(series.W_ext)) if len(series) else 0.0
    res_max = float(np.max(np.abs(series.balance_residual))) if len(series) else 0.0
    return {
        "t_init": t_init,
        "final_apex": float(series.apex[-1]) if len(series) else None,
        "n_events": stats.n_events,
        "classification": stats.classification.value,
        "max_abs_balance_residual": res_max,
        "max_W_ext": w_max,
        "relative_balance_residual": res_max / w_max if w_max > 0 else 0.0,
        "max_forerun_extent": float(np.max(series.forerun_front - series.apex)) if len(series) else 0.0,
        "v_max": law.v_max if math.isfinite(law.v_max) else None,
    }
