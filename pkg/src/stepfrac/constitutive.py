"""Beam/foundation parameters, the external load and the cohesive foundation law.

Everything here is pure and vectorised: ``x`` and ``v`` may be scalars or
numpy arrays of matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError


class BreakageMode(str, Enum):
    """How a bond behaves once its opening reaches ``v_max``."""

    IRREVERSIBLE = "irreversible"
    LITERAL = "literal"


class LoadKind(str, Enum):
    ARCTAN_RAMP = "arctan_ramp"
    SINUSOID = "sinusoid"
    CONSTANT_UNIFORM = "constant_uniform"


@dataclass(frozen=True)
class BeamConfig:
    """Geometry and material of one arm of the double cantilever beam.

    Attributes:
        L: Beam length [m].
        L0: Initial notch length [m]; no foundation for ``x < L0``.
        rhoA: Mass per unit length [kg/m].
        EJ: Bending stiffness [N m^2].
    """

    L: float = 10.0
    L0: float = 0.8
    rhoA: float = 500.0
    EJ: float = 0.15

    def __post_init__(self):
        for name in ("L", "L0", "rhoA", "EJ"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}", key=name)
        if self.L <= 0:
            raise ConfigError(f"L must be positive, got {self.L}", key="L")
        # L0 = 0 is accepted (fully supported beam, used by the static checks).
        if not 0 <= self.L0 < self.L:
            raise ConfigError(f"L0 must satisfy 0 <= L0 < L, got L0={self.L0}, L={self.L}", key="L0")
        if self.rhoA <= 0:
            raise ConfigError(f"rhoA must be positive, got {self.rhoA}", key="rhoA")
        if self.EJ <= 0:
            raise ConfigError(f"EJ must be positive, got {self.EJ}", key="EJ")


@dataclass(frozen=True)
class CohesiveLaw:
    """Elastic-brittle foundation with a penalty branch for closing.

    Attributes:
        k: Foundation stiffness per unit length for ``0 <= v < v_max``.
        beta: Penalty stiffness for ``v < 0`` (interpenetration).
        v_max: Critical half-opening. ``math.inf`` disables breakage.
        mode: Breakage mode.
    """

    k: float = 18.0
    beta: float = 18000.0
    v_max: float = 0.01
    mode: BreakageMode = BreakageMode.IRREVERSIBLE

    def __post_init__(self):
        object.__setattr__(self, "mode", BreakageMode(self.mode))
        if not (math.isfinite(self.k) and self.k > 0):
            raise ConfigError(f"k must be positive, got {self.k}", key="k")
        if not (self.v_max > 0) or math.isnan(self.v_max):
            raise ConfigError(f"v_max must be positive, got {self.v_max}", key="v_max")
        if not (math.isfinite(self.beta) and self.beta >= self.k):
            raise ConfigError(f"beta must be finite and >= k, got beta={self.beta}, k={self.k}", key="beta")


@dataclass(frozen=True)
class LoadModel:
    """Distributed transverse load acting on the whole beam.

    ``amplitude`` and ``omega`` are used by the sinusoid, ``q0`` by the
    constant uniform load; the arctan ramp has no free parameters.
    """

    kind: LoadKind = LoadKind.ARCTAN_RAMP
    amplitude: float = 1.0
    omega: float = 1.0
    q0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", LoadKind(self.kind))
        if self.kind is LoadKind.SINUSOID:
            if not (math.isfinite(self.amplitude) and self.amplitude > 0):
                raise ConfigError(f"amplitude must be positive, got {self.amplitude}", key="amplitude")
            if not (math.isfinite(self.omega) and self.omega > 0):
                raise ConfigError(f"omega must be positive, got {self.omega}", key="omega")
        if not math.isfinite(self.q0):
            raise ConfigError(f"q0 must be finite, got {self.q0}", key="q0")


def heaviside(xi):
    """Unit step with ``heaviside(0) == 1``."""
    return np.where(np.asarray(xi) < 0, 0.0, 1.0)[()]


def load_profile(x):
    """Spatial shape ``1 / (2 pi (x + 0.9))`` shared by the ramp and the sinusoid."""
    return 1.0 / (2.0 * np.pi * (np.asarray(x, dtype=float) + 0.9))


def load_time_factor(load: LoadModel, t: float) -> float:
    """Time factor multiplying :func:`load_profile` (unused for the uniform load)."""
    if load.kind is LoadKind.ARCTAN_RAMP:
        return math.atan(t**4 / 2.0)
    if load.kind is LoadKind.SINUSOID:
        return load.amplitude * math.sin(load.omega * t)
    return 1.0


def eval_load(load: LoadModel, x, t: float):
    """External load per unit length at position(s) ``x`` and time ``t``."""
    if load.kind is LoadKind.CONSTANT_UNIFORM:
        return np.full(np.shape(x), load.q0, dtype=float)[()]
    return (load_profile(x) * load_time_factor(load, t))[()]


def eval_foundation_force(law: CohesiveLaw, cfg: BeamConfig, x, v, bond_broken=False):
    """Restoring force per unit length exerted by the foundation.

    The returned value opposes ``v`` and is subtracted in the momentum
    balance. In literal mode the law is stateless and ``bond_broken`` is
    ignored; in irreversible mode a broken bond carries no force.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    with np.errstate(invalid="ignore"):
        # Heaviside product form; an infinite v_max leaves the breakage factor at 1.
        force = (
            heaviside(x - cfg.L0)
            * (1.0 - heaviside(v - law.v_max))
            * (law.k * heaviside(v) + law.beta * heaviside(-v))
            * v
        )
    if law.mode is BreakageMode.IRREVERSIBLE:
        force = np.where(np.asarray(bond_broken, dtype=bool), 0.0, force)
    return (force + 0.0)[()]


def foundation_potential(law: CohesiveLaw, v):
    """Stored energy per unit length of an intact, supported bond.

    In literal mode the potential plateaus at ``k v_max^2 / 2`` beyond
    ``v_max``; the irreversible ledger never evaluates it there because the
    bond is broken by then.
    """
    v = np.asarray(v, dtype=float)
    capped = np.minimum(v, law.v_max)
    return np.where(v < 0, 0.5 * law.beta * v * v, 0.5 * law.k * capped * capped)[()]
