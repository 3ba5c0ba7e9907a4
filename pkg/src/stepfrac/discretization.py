"""Uniform grid, free-free fourth-difference operator, energies and a static solver.

Free ends are imposed through two ghost nodes per end chosen so that the
discrete second and third differences vanish at the end node:

    v[-1] = 2 v[0] - v[1]
    v[-2] = 4 v[0] - 4 v[1] + v[2]

The resulting operator annihilates constant and linear fields exactly and is
self-adjoint under the trapezoid-weighted inner product used for the lumped
mass and foundation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.linalg import solve_banded

from .constitutive import BeamConfig, BreakageMode, CohesiveLaw, foundation_potential
from .errors import ConfigError, SolverError

MIN_INTERVALS = 16


class BondState(IntEnum):
    ABSENT = 0
    INTACT = 1
    BROKEN = 2


@dataclass(frozen=True)
class Grid:
    N: int
    h: float
    x: np.ndarray
    i_notch: int
    L0: float

    @property
    def supported(self) -> np.ndarray:
        """Boolean mask of nodes that carry a foundation bond."""
        mask = np.zeros(self.N + 1, dtype=bool)
        mask[self.i_notch:] = True
        return mask

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights (``h`` inside, ``h/2`` at both ends)."""
        w = np.full(self.N + 1, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    @property
    def foundation_weights(self) -> np.ndarray:
        """Quadrature weights for integrals over the supported span ``[L0, L]``.

        Each supported node owns the supported part of its dual cell; the
        first one also absorbs any gap between ``L0`` and its cell. The
        weights sum to ``L - L0`` exactly, and a notch on a node gets ``h/2``
        like any other endpoint of the trapezoid rule.
        """
        w = np.where(self.supported, self.weights, 0.0)
        i = self.i_notch
        if 0 < i <= self.N:
            w[i] = min(self.x[i] + 0.5 * self.h, self.x[-1]) - self.L0
        return w

    @property
    def foundation_scale(self) -> np.ndarray:
        """Ratio of foundation to mass weights: the per-node spring multiplier."""
        return self.foundation_weights / self.weights


@dataclass(frozen=True)
class EnergyBreakdown:
    E_kin: float
    E_bend: float
    E_found: float

    @property
    def total(self) -> float:
        return self.E_kin + self.E_bend + self.E_found


def build_grid(cfg: BeamConfig, N: int) -> Grid:
    if int(N) != N or N < MIN_INTERVALS:
        raise ConfigError(f"N must be an integer >= {MIN_INTERVALS}, got {N}", key="N")
    N = int(N)
    h = cfg.L / N
    x = np.arange(N + 1) * h
    x[-1] = cfg.L
    # Absorb round-off so that L0 = 0.8, h = 0.01 gives node 80, not 81.
    i_notch = math.ceil(cfg.L0 / h - 1e-9)
    x = x.copy()
    if abs(x[i_notch] - cfg.L0) <= 1e-9 * h:
        x[i_notch] = cfg.L0
    x.setflags(write=False)
    return Grid(N=N, h=h, x=x, i_notch=i_notch, L0=cfg.L0)


def _pad_free(v: np.ndarray) -> np.ndarray:
    g = np.empty(v.size + 4)
    g[2:-2] = v
    g[1] = 2.0 * v[0] - v[1]
    g[0] = 4.0 * v[0] - 4.0 * v[1] + v[2]
    g[-2] = 2.0 * v[-1] - v[-2]
    g[-1] = 4.0 * v[-1] - 4.0 * v[-2] + v[-3]
    return g


def apply_bending_operator(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Five-point approximation of the fourth derivative with free ends."""
    g = _pad_free(np.asarray(v, dtype=float))
    return (g[:-4] - 4.0 * g[1:-3] + 6.0 * g[2:-2] - 4.0 * g[3:-1] + g[4:]) / grid.h**4


def curvature(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Second difference of ``v``; zero at both free ends by construction."""
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    out[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / grid.h**2
    return out


def bending_operator_bands(grid: Grid) -> np.ndarray:
    """The fourth-difference matrix in LAPACK (2, 2) banded storage."""
    n = grid.N + 1
    ab = np.zeros((5, n))
    # ab[2 + i - j, j] = A[i, j]
    diag = np.full(n, 6.0)
    up1 = np.full(n - 1, -4.0)  # A[j, j+1]
    lo1 = np.full(n - 1, -4.0)  # A[j+1, j]
    up2 = np.ones(n - 2)  # A[j, j+2]
    lo2 = np.ones(n - 2)  # A[j+2, j]
    # After ghost elimination: row 0 = [2, -4, 2], row 1 = [-2, 5, -4, 1], mirrored at x = L.
    diag[0] = diag[-1] = 2.0
    diag[1] = diag[-2] = 5.0
    lo1[0] = up1[-1] = -2.0
    up2[0] = lo2[-1] = 2.0
    ab[0, 2:] = up2
    ab[1, 1:] = up1
    ab[2, :] = diag
    ab[3, :-1] = lo1
    ab[4, :-2] = lo2
    return ab / grid.h**4


def energy_components(
    grid: Grid,
    cfg: BeamConfig,
    law: CohesiveLaw,
    v: np.ndarray,
    vdot: np.ndarray,
    bonds: np.ndarray | None = None,
) -> EnergyBreakdown:
    """Kinetic, bending and foundation energy with trapezoid weights.

    In irreversible mode only intact bonds store energy; in literal mode
    every supported node contributes its (plateaued) potential. ``bonds``
    defaults to all supported nodes intact.
    """
    w = grid.weights
    v = np.asarray(v, dtype=float)
    vdot = np.asarray(vdot, dtype=float)
    kappa = curvature(grid, v)
    e_kin = 0.5 * cfg.rhoA * float(np.dot(w, vdot * vdot))
    e_bend = 0.5 * cfg.EJ * float(np.dot(w, kappa * kappa))
    if bonds is None or law.mode is BreakageMode.LITERAL:
        active = grid.supported
    else:
        active = np.asarray(bonds) == BondState.INTACT
    wf = grid.foundation_weights
    e_found = float(np.dot(wf[active], foundation_potential(law, v[active])))
    return EnergyBreakdown(e_kin, e_bend, e_found)


def solve_static(grid: Grid, cfg: BeamConfig, law: CohesiveLaw, q: np.ndarray) -> np.ndarray:
    """Solve ``EJ D4 v + k_i v = q`` with every supported bond intact and linear."""
    q = np.asarray(q, dtype=float)
    if q.shape != (grid.N + 1,):
        raise ValueError(f"load field must have length {grid.N + 1}, got shape {q.shape}")
    k_nodes = np.where(grid.supported, law.k * grid.foundation_scale, 0.0)
    # Fewer than two springs leaves a rigid translation or rotation unrestrained.
    if np.count_nonzero(k_nodes) < 2:
        raise SolverError("static system is singular: fewer than two supported nodes")
    ab = cfg.EJ * bending_operator_bands(grid)
    ab[2] += k_nodes
    try:
        v = solve_banded((2, 2), ab, q)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"static system is singular: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise SolverError("static solve produced non-finite values")
    return v
