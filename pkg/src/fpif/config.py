"""Experiment configuration: strict JSON with every default filled in.

The serialised form of a parsed config is the single source of truth for
defaults, so ``parse_config(dump_config(parse_config(c)))`` equals
``parse_config(c)``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .drift import DriftSpec
from .grid import ConfigurationError
from .steady_state import default_alpha

__all__ = [
    "ConfigError",
    "GridConfig",
    "TruncConfig",
    "TimeConfig",
    "InitialConfig",
    "ParticlesConfig",
    "DiagnosticsConfig",
    "ExperimentConfig",
    "parse_config",
    "dump_config",
    "config_hash",
]


class ConfigError(ConfigurationError):
    """Malformed JSON or a violated cross-field constraint."""


def _strict(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class GridConfig:
    x_min: float = -8.0
    x_max: float = 18.0
    dx: float = 0.01


@dataclass
class TruncConfig:
    R: float = 10.0
    alpha_R: float | None = None


@dataclass
class TimeConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    snapshot_every: float = 0.5


_INITIAL_DEFAULTS = {
    "gaussian": {"center": -3.0, "sigma": 0.3},
    "steady": {},
    "point": {"x": 0.0},
    "file": {"path": None},
}


@dataclass
class InitialConfig:
    kind: str = "gaussian"
    params: dict = field(default_factory=dict)


@dataclass
class ParticlesConfig:
    m_particles: int = 100_000
    dt: float = 1e-3
    x_blow: float = 50.0
    t_end: float = 20.0
    seed: int = 0
    burn_in: float | None = None
    sample_every: float = 0.05


@dataclass
class DiagnosticsConfig:
    entropy_kinds: list = field(default_factory=lambda: ["Square", "Abs"])
    probes: list = field(default_factory=lambda: [4.0, 6.0, 8.0])
    rate_window: list | None = None
    initial_centers: list = field(default_factory=lambda: [-3.0, 2.0])


@dataclass
class ExperimentConfig:
    drift: dict
    grid: GridConfig
    trunc: TruncConfig
    time: TimeConfig
    initial: InitialConfig
    particles: ParticlesConfig
    diagnostics: DiagnosticsConfig

    def drift_spec(self) -> DriftSpec:
        return DriftSpec.from_dict(self.drift)

    def to_dict(self):
        return {
            "drift": dict(self.drift),
            "grid": dataclasses.asdict(self.grid),
            "trunc": dataclasses.asdict(self.trunc),
            "time": dataclasses.asdict(self.time),
            "initial": dataclasses.asdict(self.initial),
            "particles": dataclasses.asdict(self.particles),
            "diagnostics": dataclasses.asdict(self.diagnostics),
        }


_SECTIONS = {"drift", "grid", "trunc", "time", "initial", "particles", "diagnostics"}


def _validate(cfg: ExperimentConfig, spec: DriftSpec):
    g, tr, tm = cfg.grid, cfg.trunc, cfg.time
    checks = [
        (g.dx > 0.0, "dx > 0 violated"),
        (g.x_min < 0.0 < g.x_max, "x_min < 0 < x_max violated"),
        (g.x_min < spec.x0, "x_min < x0 violated"),
        (spec.x1 < g.x_max, "x1 < x_max violated"),
        (spec.x1 < tr.R, "x1 < R violated"),
        (tr.R < g.x_max, "R < x_max violated"),
        (tr.alpha_R > 0.0, "alpha_R > 0 violated"),
        (tm.dt > 0.0, "dt > 0 violated"),
        (tm.t_end > 0.0, "t_end > 0 violated"),
        (tm.snapshot_every >= tm.dt, "snapshot_every >= dt violated"),
        (all(p < tr.R for p in cfg.diagnostics.probes), "probes < R violated"),
        (all(p >= spec.x1 for p in cfg.diagnostics.probes), "probes >= x1 violated"),
        (cfg.particles.m_particles >= 1, "m_particles >= 1 violated"),
        (cfg.particles.dt > 0.0, "particles.dt > 0 violated"),
        (cfg.particles.x_blow > spec.x1, "x_blow > x1 violated"),
    ]
    for ok, message in checks:
        if not ok:
            raise ConfigError(message)
    if cfg.initial.kind not in _INITIAL_DEFAULTS:
        raise ConfigError(f"initial.kind must be one of {sorted(_INITIAL_DEFAULTS)}")
    if cfg.initial.kind == "file" and not cfg.initial.params.get("path"):
        raise ConfigError("initial.kind 'file' needs params.path")
    for kind in cfg.diagnostics.entropy_kinds:
        if kind not in ("Square", "Abs", "Positive"):
            raise ConfigError(f"unknown entropy kind {kind!r}")


def _from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - _SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    try:
        spec = DriftSpec.from_dict(data.get("drift", {}) or {})
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"drift: {exc}") from None
    grid = _strict(GridConfig, data.get("grid"), "grid")
    trunc = _strict(TruncConfig, data.get("trunc"), "trunc")
    time = _strict(TimeConfig, data.get("time"), "time")
    initial = _strict(InitialConfig, data.get("initial"), "initial")
    particles = _strict(ParticlesConfig, data.get("particles"), "particles")
    diagnostics = _strict(DiagnosticsConfig, data.get("diagnostics"), "diagnostics")
    defaults = _INITIAL_DEFAULTS.get(initial.kind)
    if defaults is not None:
        extra = sorted(set(initial.params) - set(defaults))
        if extra:
            raise ConfigError(f"initial.params: unknown keys {extra} for kind {initial.kind!r}")
        initial.params = {**defaults, **initial.params}
    if trunc.R > spec.x1 and trunc.alpha_R is None:
        trunc.alpha_R = default_alpha(spec, trunc.R)
    elif trunc.alpha_R is None:
        trunc.alpha_R = 1.0
    cfg = ExperimentConfig(spec.to_dict(), grid, trunc, time, initial, particles, diagnostics)
    _validate(cfg, spec)
    return cfg


def parse_config(source) -> ExperimentConfig:
    """Parse a config from a path, JSON text or an already-decoded dict."""
    if isinstance(source, dict):
        return _from_dict(source)
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        text = path.read_text()
        where = str(path)
    else:
        text, where = source, "<text>"
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return _from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
