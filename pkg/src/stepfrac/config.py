"""JSON run configuration: parsing, defaults and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .constitutive import BeamConfig, BreakageMode, CohesiveLaw, LoadKind, LoadModel
from .errors import ConfigError
from . import metrics

DEFAULT_N = 1000
DEFAULT_DT_SAFETY = 0.5
DEFAULT_OUTPUT_EVERY = 10
DEFAULT_BETA_OVER_K = 1000.0

_TOP_KEYS = {"description", "beam", "law", "load", "N", "dt_safety", "t_end", "output_every",
             "snapshot_times", "detector"}
_BEAM_KEYS = {"L", "L0", "rhoA", "EJ"}
_LAW_KEYS = {"k", "beta", "v_max", "mode"}
_LOAD_KEYS = {"kind", "amplitude", "omega", "q0"}
_DETECTOR_KEYS = {"s_min", "window", "cv_threshold", "eps_cz", "velocity_window"}


@dataclass(frozen=True)
class DetectorSettings:
    """Jump-detector and trace-derivation knobs; ``s_min=None`` means ``10 h``."""

    s_min: float | None = None
    window: float = metrics.DEFAULT_WINDOW
    cv_threshold: float = metrics.DEFAULT_CV_THRESHOLD
    eps_cz: float = metrics.DEFAULT_EPS_CZ
    velocity_window: int = metrics.DEFAULT_VELOCITY_WINDOW

    def resolve_s_min(self, h: float) -> float:
        return metrics.default_s_min(h) if self.s_min is None else self.s_min


@dataclass(frozen=True)
class RunConfig:
    beam: BeamConfig
    law: CohesiveLaw
    load: LoadModel
    t_end: float
    N: int = DEFAULT_N
    dt_safety: float = DEFAULT_DT_SAFETY
    output_every: int = DEFAULT_OUTPUT_EVERY
    snapshot_times: tuple[float, ...] = ()
    detector: DetectorSettings = field(default_factory=DetectorSettings)
    description: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"t_end must be positive, got {self.t_end}", key="t_end")
        if not (0 < self.dt_safety <= 1):
            raise ConfigError(f"dt_safety must lie in (0, 1], got {self.dt_safety}", key="dt_safety")
        if self.N < 16:
            raise ConfigError(f"N must be >= 16, got {self.N}", key="N")
        if self.output_every < 1:
            raise ConfigError(f"output_every must be >= 1, got {self.output_every}", key="output_every")
        for ts in self.snapshot_times:
            if not 0 <= ts <= self.t_end:
                raise ConfigError(f"snapshot time {ts} outside [0, t_end={self.t_end}]", key="snapshot_times")

    def with_level(self, N: int, dt_safety: float) -> "RunConfig":
        from dataclasses import replace

        return replace(self, N=N, dt_safety=dt_safety)

    def to_dict(self) -> dict:
        d = {
            "beam": {"L": self.beam.L, "L0": self.beam.L0, "rhoA": self.beam.rhoA, "EJ": self.beam.EJ},
            "law": {
                "k": self.law.k,
                "beta": self.law.beta,
                "v_max": self.law.v_max if math.isfinite(self.law.v_max) else None,
                "mode": self.law.mode.value,
            },
            "load": _load_dict(self.load),
            "N": self.N,
            "dt_safety": self.dt_safety,
            "t_end": self.t_end,
            "output_every": self.output_every,
            "snapshot_times": list(self.snapshot_times),
            "detector": {
                "s_min": self.detector.s_min,
                "window": self.detector.window,
                "cv_threshold": self.detector.cv_threshold,
                "eps_cz": self.detector.eps_cz,
                "velocity_window": self.detector.velocity_window,
            },
        }
        if self.description:
            d = {"description": self.description, **d}
        return d


def _load_dict(load: LoadModel) -> dict:
    if load.kind is LoadKind.SINUSOID:
        return {"kind": load.kind.value, "amplitude": load.amplitude, "omega": load.omega}
    if load.kind is LoadKind.CONSTANT_UNIFORM:
        return {"kind": load.kind.value, "q0": load.q0}
    return {"kind": load.kind.value}


def _check_keys(obj, allowed: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object", key=where)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r} in {where}", key=unknown[0])


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise ConfigError(f"missing required key {key!r} in {where}", key=key)
    return obj[key]


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}", key=key)
    return float(value)


def _integer(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}", key=key)
    return value


def config_from_dict(doc: dict) -> RunConfig:
    _check_keys(doc, _TOP_KEYS, "config")

    beam_doc = _require(doc, "beam", "config")
    _check_keys(beam_doc, _BEAM_KEYS, "beam")
    beam = BeamConfig(**{k: _number(_require(beam_doc, k, "beam"), k) for k in ("L", "L0", "rhoA", "EJ")})

    law_doc = _require(doc, "law", "config")
    _check_keys(law_doc, _LAW_KEYS, "law")
    k = _number(_require(law_doc, "k", "law"), "k")
    v_max_raw = _require(law_doc, "v_max", "law")
    v_max = math.inf if v_max_raw is None else _number(v_max_raw, "v_max")
    beta = _number(law_doc["beta"], "beta") if "beta" in law_doc else DEFAULT_BETA_OVER_K * k
    try:
        mode = BreakageMode(law_doc.get("mode", BreakageMode.IRREVERSIBLE.value))
    except ValueError:
        raise ConfigError(f"mode must be one of {[m.value for m in BreakageMode]}", key="mode") from None
    law = CohesiveLaw(k=k, beta=beta, v_max=v_max, mode=mode)

    load_doc = _require(doc, "load", "config")
    _check_keys(load_doc, _LOAD_KEYS, "load")
    try:
        kind = LoadKind(_require(load_doc, "kind", "load"))
    except ValueError:
        raise ConfigError(f"load kind must be one of {[m.value for m in LoadKind]}", key="kind") from None
    load_kw = {"kind": kind}
    if kind is LoadKind.SINUSOID:
        load_kw["amplitude"] = _number(_require(load_doc, "amplitude", "load"), "amplitude")
        load_kw["omega"] = _number(_require(load_doc, "omega", "load"), "omega")
    elif kind is LoadKind.CONSTANT_UNIFORM:
        load_kw["q0"] = _number(_require(load_doc, "q0", "load"), "q0")
    load = LoadModel(**load_kw)

    det_doc = doc.get("detector", {})
    _check_keys(det_doc, _DETECTOR_KEYS, "detector")
    det = DetectorSettings(
        s_min=None if det_doc.get("s_min") is None else _number(det_doc["s_min"], "s_min"),
        window=_number(det_doc.get("window", metrics.DEFAULT_WINDOW), "window"),
        cv_threshold=_number(det_doc.get("cv_threshold", metrics.DEFAULT_CV_THRESHOLD), "cv_threshold"),
        eps_cz=_number(det_doc.get("eps_cz", metrics.DEFAULT_EPS_CZ), "eps_cz"),
        velocity_window=_integer(det_doc.get("velocity_window", metrics.DEFAULT_VELOCITY_WINDOW), "velocity_window"),
    )
    if det.s_min is not None and det.s_min <= 0:
        raise ConfigError("s_min must be positive", key="s_min")
    if det.window <= 0:
        raise ConfigError("window must be positive", key="window")
    if det.eps_cz < 0:
        raise ConfigError("eps_cz must be non-negative", key="eps_cz")
    if det.velocity_window < 3 or det.velocity_window % 2 == 0:
        raise ConfigError("velocity_window must be odd and >= 3", key="velocity_window")

    snaps = doc.get("snapshot_times", [])
    if not isinstance(snaps, list):
        raise ConfigError("snapshot_times must be a list", key="snapshot_times")
    description = doc.get("description", "")
    if not isinstance(description, str):
        raise ConfigError("description must be a string", key="description")

    return RunConfig(
        beam=beam,
        law=law,
        load=load,
        t_end=_number(_require(doc, "t_end", "config"), "t_end"),
        N=_integer(doc.get("N", DEFAULT_N), "N"),
        dt_safety=_number(doc.get("dt_safety", DEFAULT_DT_SAFETY), "dt_safety"),
        output_every=_integer(doc.get("output_every", DEFAULT_OUTPUT_EVERY), "output_every"),
        snapshot_times=tuple(_number(s, "snapshot_times") for s in snaps),
        detector=det,
        description=description,
    )


def parse_config(text: str) -> RunConfig:
    """Parse a JSON document into a validated :class:`RunConfig`."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from exc
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
