"""Run configuration: one TOML document, strict keys, every default explicit.

Sections map one-to-one to the dataclasses below.  Unknown sections or keys
are rejected, and validation failures name the offending ``section.key``.
Angles in the file are in degrees.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import UavParams
from .perception import RiskParams, SensorModel, YawOptConfig
from .safety import CbfParams
from .tracking import AttitudeGains, lqr_synthesize

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    pass


@dataclass
class ControlConfig:
    dt: float = 0.002
    lqr_q_pos: float = 16.0
    lqr_q_vel: float = 5.0
    lqr_r: float = 1.0
    k_q: float = 2000.0
    k_omega: float = 60.0
    H_qp: tuple = (1.0, 1.0, 1.0)
    xi: float = 1.0
    clf_rate_fraction: float = 0.5  # of the LQR Lyapunov decay rate
    clf_weighting: str = "riccati"
    relax_weight: float = 1e6

    def __post_init__(self):
        if not 0 < self.dt <= 0.01:
            raise ValueError("control.dt must lie in (0, 0.01]")
        if self.lqr_q_pos <= 0 or self.lqr_q_vel < 0 or self.lqr_r <= 0:
            raise ValueError("control.lqr_* weights must be positive")
        AttitudeGains(self.k_q, self.k_omega)
        if len(self.H_qp) != 3 or min(self.H_qp) <= 0:
            raise ValueError("control.H_qp must be three positive entries")
        if self.xi <= 0:
            raise ValueError("control.xi must be > 0")
        if self.clf_rate_fraction <= 0:
            raise ValueError("control.clf_rate_fraction must be > 0")
        if self.clf_weighting not in ("riccati", "identity", "off"):
            raise ValueError("control.clf_weighting must be riccati, identity or off")

    def lqr(self):
        return lqr_synthesize(self.lqr_q_pos, self.lqr_q_vel, self.lqr_r)

    def clf_rate(self) -> float:
        K = self.lqr()
        if self.clf_weighting == "identity":
            return self.clf_rate_fraction * min(K.k_p, K.k_v) / 2.0
        return self.clf_rate_fraction * K.decay_rate(self.lqr_q_pos, self.lqr_q_vel, self.lqr_r)


@dataclass
class SensorConfig:
    sigma_deg: float = 30.0
    kappa_deg: float | None = None
    rho: float = 3.0
    mode: str = "degraded"

    def __post_init__(self):
        self.model()

    def model(self) -> SensorModel:
        kappa = None if self.kappa_deg is None else math.radians(self.kappa_deg)
        return SensorModel(math.radians(self.sigma_deg), kappa, self.rho, self.mode)


@dataclass
class PerceptionConfig:
    epsilon: float = 0.002
    search_increment_deg: float = 9.0
    quadrature_points: int = 33
    period_steps: int = 1
    coast: bool = True
    explore_alpha: float = 0.3
    explore_beta: float = 1.0
    explore_preview: float = 2.0

    def __post_init__(self):
        self.yaw_opt()
        if self.period_steps < 1:
            raise ValueError("perception.period_steps must be >= 1")
        if self.explore_alpha < 0 or self.explore_beta <= 0 or self.explore_preview < 0:
            raise ValueError("perception.explore_* must be non-negative (beta > 0)")

    def yaw_opt(self) -> YawOptConfig:
        return YawOptConfig(self.epsilon, math.radians(self.search_increment_deg), int(self.quadrature_points))


@dataclass
class SafetyConfig:
    obstacle_radius_true: float = 0.10
    safety_factor: float = 1.5

    def __post_init__(self):
        if self.obstacle_radius_true <= 0:
            raise ValueError("safety.obstacle_radius_true must be > 0")
        if self.safety_factor < 1:
            raise ValueError("safety.safety_factor must be >= 1")

    def barrier_radius(self, uav_radius: float) -> float:
        return self.safety_factor * (self.obstacle_radius_true + uav_radius)


@dataclass
class PolicyConfig:
    fixed_value_deg: float = 0.0
    look_ahead_preview: float = 0.5

    def __post_init__(self):
        if self.look_ahead_preview < 0:
            raise ValueError("policy.look_ahead_preview must be >= 0")


@dataclass
class ObstacleConfig:
    speed_min: float = 0.1
    speed_max: float = 0.5
    weight_static: float = 0.2
    weight_linear: float = 0.5
    weight_sinusoidal: float = 0.3
    sin_amplitude_max: float = 0.4
    sin_omega_min: float = 0.3
    sin_omega_max: float = 1.2
    intercept_start: float = 0.15
    intercept_end: float = 0.9
    intercept_offset_max: float = 0.15
    min_start_clearance: float = 1.0
    max_attempts: int = 1000

    def __post_init__(self):
        if not 0 <= self.speed_min <= self.speed_max:
            raise ValueError("obstacles.speed_min must be in [0, speed_max]")
        weights = (self.weight_static, self.weight_linear, self.weight_sinusoidal)
        if min(weights) < 0 or sum(weights) <= 0:
            raise ValueError("obstacles.weight_* must be non-negative with a positive sum")
        if not 0 <= self.intercept_start < self.intercept_end <= 1:
            raise ValueError("obstacles.intercept_start/end must satisfy 0 <= start < end <= 1")
        if self.sin_omega_min <= 0 or self.sin_omega_max < self.sin_omega_min:
            raise ValueError("obstacles.sin_omega_min/max invalid")
        if self.max_attempts < 1:
            raise ValueError("obstacles.max_attempts must be >= 1")


@dataclass
class InfinityProfile:
    duration: float = 20.0
    center: tuple = (0.0, 0.0, 0.5)
    extent_x: float = 2.0
    extent_y: float = 1.0
    period: float = 10.0
    obstacle_count: int = 2

    def __post_init__(self):
        if self.duration <= 0 or self.period <= 0 or self.extent_x <= 0 or self.extent_y <= 0:
            raise ValueError("infinity.duration/period/extents must be > 0")
        if self.obstacle_count < 0:
            raise ValueError("infinity.obstacle_count must be >= 0")


@dataclass
class CorridorProfile:
    duration: float = 15.0
    length: float = 15.0
    width: float = 2.0
    altitude: float = 0.5
    speed: float = 1.0
    amplitude: float = 0.5
    period: float = 5.0
    obstacle_count: int = 20

    def __post_init__(self):
        if min(self.duration, self.length, self.width, self.speed, self.period) <= 0:
            raise ValueError("corridor.duration/length/width/speed/period must be > 0")
        if self.amplitude < 0:
            raise ValueError("corridor.amplitude must be >= 0")
        if self.obstacle_count < 0:
            raise ValueError("corridor.obstacle_count must be >= 0")


@dataclass
class Config:
    uav: UavParams = field(default_factory=UavParams)
    control: ControlConfig = field(default_factory=ControlConfig)
    cbf: CbfParams = field(default_factory=CbfParams)
    risk: RiskParams = field(default_factory=RiskParams)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    perception: PerceptionConfig = field(default_factory=PerceptionConfig)
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    obstacles: ObstacleConfig = field(default_factory=ObstacleConfig)
    infinity: InfinityProfile = field(default_factory=InfinityProfile)
    corridor: CorridorProfile = field(default_factory=CorridorProfile)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **sections) -> "Config":
        """Copy with whole sections swapped or ``{"section": {key: value}}`` overrides."""
        out = self
        for name, value in sections.items():
            if isinstance(value, dict):
                value = dataclasses.replace(getattr(out, name), **value)
            out = dataclasses.replace(out, **{name: value})
        return out


def _section(cls, name: str, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            raise ConfigError(f"unknown key {name}.{key}")
        if isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{name}] {exc}") from exc


def config_from_dict(doc: dict) -> Config:
    sections = {f.name: f for f in dataclasses.fields(Config)}
    kwargs = {}
    for name, raw in doc.items():
        if name not in sections:
            raise ConfigError(f"unknown section [{name}]")
        cls = sections[name].default_factory().__class__
        kwargs[name] = _section(cls, name, raw)
    return Config(**kwargs)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc.strerror or exc}") from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path}: {exc}") from exc
    return config_from_dict(doc)


def dump_toml(cfg: Config) -> str:
    """Render a config as TOML (``None`` values are omitted)."""
    lines = []
    for name, section in cfg.to_dict().items():
        lines.append(f"[{name}]")
        for key, value in section.items():
            if value is None:
                continue
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)
