"""Explicit central-difference integration of the beam on a breakable foundation.

Semi-discrete system, per node (lumped mass, nodal springs)::

    rhoA * a_i + EJ * D4(v)_i + f(x_i, v_i) = q(x_i, t)

The scheme is undamped and time-reversible while no bond changes state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .constitutive import (
    BeamConfig,
    BreakageMode,
    CohesiveLaw,
    LoadKind,
    LoadModel,
    eval_foundation_force,
    load_profile,
    load_time_factor,
)
from .discretization import BondState, Grid, apply_bending_operator, energy_components
from .errors import ConfigError, DivergenceError
from . import metrics


@dataclass
class SimState:
    t: float
    v: np.ndarray
    v_prev: np.ndarray
    bonds: np.ndarray
    W_ext: float = 0.0
    E_frac: float = 0.0
    step_index: int = 0

    def copy(self) -> "SimState":
        return replace(self, v=self.v.copy(), v_prev=self.v_prev.copy(), bonds=self.bonds.copy())


@dataclass(frozen=True)
class TimeStepControl:
    dt: float
    safety: float
    n_steps: int
    output_every: int = 10

    def __post_init__(self):
        if not 0 < self.safety <= 1:
            raise ConfigError(f"dt_safety must lie in (0, 1], got {self.safety}", key="dt_safety")
        if self.output_every < 1:
            raise ConfigError(f"output_every must be >= 1, got {self.output_every}", key="output_every")


@dataclass
class Snapshot:
    t: float
    step_index: int
    v: np.ndarray
    bonds: np.ndarray
    foundation_force: np.ndarray


@dataclass
class RunResult:
    grid: Grid
    control: TimeStepControl
    series: metrics.TimeSeries
    snapshots: list[Snapshot]
    state: SimState
    error: DivergenceError | None = None


def stable_dt(grid: Grid, cfg: BeamConfig, law: CohesiveLaw) -> float:
    """Critical central-difference step, before any safety factor.

    ``16 / h^4`` bounds the spectrum of the free-free fourth difference
    (Gershgorin on its rows), so ``omega_b`` is an upper bound on the
    flexural frequencies the grid can carry.
    """
    omega_b = 4.0 / grid.h**2 * math.sqrt(cfg.EJ / cfg.rhoA)
    omega_s2 = max(law.k, law.beta) / cfg.rhoA
    return 2.0 / math.sqrt(omega_b**2 + omega_s2)


def time_step_control(
    grid: Grid, cfg: BeamConfig, law: CohesiveLaw, t_end: float, safety: float = 0.5, output_every: int = 10
) -> TimeStepControl:
    """Pick the largest ``dt <= safety * dt_crit`` that divides ``t_end`` evenly."""
    if not 0 < safety <= 1:
        raise ConfigError(f"dt_safety must lie in (0, 1], got {safety}", key="dt_safety")
    if not t_end > 0:
        raise ConfigError(f"t_end must be positive, got {t_end}", key="t_end")
    dt_max = safety * stable_dt(grid, cfg, law)
    n_steps = math.ceil(t_end / dt_max - 1e-12)
    return TimeStepControl(dt=t_end / n_steps, safety=safety, n_steps=n_steps, output_every=output_every)


class Integrator:
    """Precomputed per-run constants plus the in-place update kernel."""

    def __init__(self, grid: Grid, cfg: BeamConfig, law: CohesiveLaw, load: LoadModel, dt: float):
        self.grid, self.cfg, self.law, self.load, self.dt = grid, cfg, law, load, dt
        self.weights = grid.weights
        self.supported = grid.supported
        self.found_weights = grid.foundation_weights
        self._spring_scale = grid.foundation_scale
        if load.kind is LoadKind.CONSTANT_UNIFORM:
            self._profile = np.full(grid.N + 1, load.q0)
        else:
            self._profile = load_profile(grid.x)
        self._dt2_over_m = dt * dt / cfg.rhoA

    def load_field(self, t: float) -> np.ndarray:
        return self._profile * load_time_factor(self.load, t)

    def foundation_force(self, v: np.ndarray, bonds: np.ndarray) -> np.ndarray:
        law = self.law
        if law.mode is BreakageMode.LITERAL:
            active = self.supported & (v < law.v_max)
        else:
            # Intact bonds always sit below v_max: crossing breaks them in the same step.
            active = bonds == BondState.INTACT
        return np.where(active, np.where(v < 0, law.beta * v, law.k * v) * self._spring_scale, 0.0)

    def initial_state(self) -> SimState:
        n = self.grid.N + 1
        bonds = np.where(self.supported, BondState.INTACT, BondState.ABSENT).astype(np.int8)
        v = np.zeros(n)
        acc = (self.load_field(0.0) - self.cfg.EJ * apply_bending_operator(self.grid, v)
               - self.foundation_force(v, bonds)) / self.cfg.rhoA
        # Taylor start with zero initial velocity.
        v_prev = v + 0.5 * self.dt * self.dt * acc
        return SimState(t=0.0, v=v, v_prev=v_prev, bonds=bonds)

    def advance(self, state: SimState) -> None:
        """One step, mutating ``state``."""
        dt = self.dt
        v, v_prev, bonds = state.v, state.v_prev, state.bonds
        rhs = (self.load_field(state.t) - self.cfg.EJ * apply_bending_operator(self.grid, v)
               - self.foundation_force(v, bonds))
        v_new = 2.0 * v - v_prev + self._dt2_over_m * rhs
        if not np.all(np.isfinite(v_new)):
            raise DivergenceError(state.step_index + 1, state.t + dt)

        q_mid = self.load_field(state.t + 0.5 * dt)
        state.W_ext += float(np.dot(self.weights, q_mid * (v_new - v)))

        # Bond update only after every node has moved.
        law = self.law
        if law.mode is BreakageMode.IRREVERSIBLE:
            newly = (bonds == BondState.INTACT) & (v_new >= law.v_max)
            if newly.any():
                vb = v_new[newly]
                state.E_frac += float(np.dot(self.found_weights[newly], 0.5 * law.k * vb * vb))
                bonds[newly] = BondState.BROKEN
        else:
            bonds[self.supported] = np.where(v_new[self.supported] >= law.v_max, BondState.BROKEN, BondState.INTACT)

        state.v_prev = v
        state.v = v_new
        state.t = (state.step_index + 1) * dt
        state.step_index += 1

    def energies(self, state: SimState):
        vdot = (state.v - state.v_prev) / self.dt
        return energy_components(self.grid, self.cfg, self.law, state.v, vdot, state.bonds)


def init_state(grid: Grid, cfg: BeamConfig, law: CohesiveLaw, load: LoadModel, dt: float) -> SimState:
    return Integrator(grid, cfg, law, load, dt).initial_state()


def step(state: SimState, grid: Grid, cfg: BeamConfig, law: CohesiveLaw, load: LoadModel, dt: float) -> SimState:
    """Return the state one step later; ``state`` itself is left untouched."""
    new = state.copy()
    Integrator(grid, cfg, law, load, dt).advance(new)
    return new


def snapshot_of(integrator: Integrator, state: SimState) -> Snapshot:
    broken = state.bonds == BondState.BROKEN
    force = eval_foundation_force(integrator.law, integrator.cfg, integrator.grid.x, state.v, broken)
    force = np.where(integrator.supported, force, 0.0)
    return Snapshot(t=state.t, step_index=state.step_index, v=state.v.copy(), bonds=state.bonds.copy(),
                    foundation_force=np.asarray(force, dtype=float))


@dataclass
class _Recorder:
    integrator: Integrator
    eps_cz: float
    rows: list = field(default_factory=list)

    def record(self, state: SimState) -> None:
        grid, law = self.integrator.grid, self.integrator.law
        apex = metrics.compute_apex(grid, state.bonds)
        active, front = metrics.detect_forerunning(grid, state.bonds)
        cz_start, cz_end = metrics.cohesive_zone(grid, law, state.bonds, state.v, self.eps_cz)
        e = self.integrator.energies(state)
        residual = e.E_kin + e.E_bend + e.E_found + state.E_frac - state.W_ext
        self.rows.append((state.t, apex, front, active, cz_start, cz_end,
                          e.E_kin, e.E_bend, e.E_found, state.E_frac, state.W_ext, residual))


def run(
    cfg: BeamConfig,
    law: CohesiveLaw,
    load: LoadModel,
    N: int,
    t_end: float,
    dt_safety: float = 0.5,
    output_every: int = 10,
    snapshot_times=(),
    eps_cz: float = metrics.DEFAULT_EPS_CZ,
    velocity_window: int = metrics.DEFAULT_VELOCITY_WINDOW,
    raise_on_divergence: bool = True,
    t_stop: float | None = None,
) -> RunResult:
    """Integrate from rest to ``t_end`` and collect the trace and snapshots.

    A trace row is written every ``output_every`` steps starting at ``t = 0``.
    Snapshots are taken at the step nearest each requested time. On
    divergence the partial result is attached to the raised error as
    ``error.partial`` (or returned with ``error`` set when
    ``raise_on_divergence`` is false). ``t_stop`` ends the integration early
    while keeping the time step that ``t_end`` implies, so a truncated run
    is a bit-identical prefix of the full one.
    """
    from .discretization import build_grid

    grid = build_grid(cfg, N)
    control = time_step_control(grid, cfg, law, t_end, dt_safety, output_every)
    for ts in snapshot_times:
        if not 0 <= ts <= t_end:
            raise ConfigError(f"snapshot time {ts} outside [0, {t_end}]", key="snapshot_times")
    snap_steps = {}
    for ts in sorted(snapshot_times):
        snap_steps.setdefault(int(round(ts / control.dt)), ts)

    integ = Integrator(grid, cfg, law, load, control.dt)
    state = integ.initial_state()
    rec = _Recorder(integ, eps_cz)
    snapshots: list[Snapshot] = []

    def observe():
        if state.step_index % control.output_every == 0:
            rec.record(state)
        if state.step_index in snap_steps:
            snapshots.append(snapshot_of(integ, state))

    n_steps = control.n_steps
    if t_stop is not None:
        n_steps = min(n_steps, int(round(t_stop / control.dt)))

    error = None
    observe()
    try:
        for _ in range(n_steps):
            integ.advance(state)
            observe()
    except DivergenceError as exc:
        error = exc

    series = metrics.TimeSeries.from_rows(rec.rows, velocity_window=velocity_window)
    result = RunResult(grid=grid, control=control, series=series, snapshots=snapshots, state=state, error=error)
    if error is not None and raise_on_divergence:
        error.partial = result
        raise error
    return result
