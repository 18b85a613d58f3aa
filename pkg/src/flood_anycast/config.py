"""Arena geometry, units and the run parameter set.

Internal units are meters and milliseconds. Speeds are kept in km/h on the
config (that is how they are entered) and converted on access.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

MS_PER_HOUR = 3_600_000.0


class ConfigError(ValueError):
    """Raised for malformed parameter files or violated constraints."""


def kmh_to_internal(speed_kmh: float) -> float:
    """Convert km/h to meters per millisecond."""
    if speed_kmh < 0:
        raise ValueError("speed must be non-negative")
    return speed_kmh * 1000.0 / MS_PER_HOUR


def distance(a, b) -> float:
    # Written out (not math.hypot) so it is bit-identical to the vectorized
    # form used by the engine.
    dx = a[0] - b[0]
    dy = a[1] - b[1]
    return math.sqrt(dx * dx + dy * dy)


class Role(enum.Enum):
    SERVER = "server"
    SIMPLE = "simple"
    SOURCE = "source"


@dataclass(frozen=True)
class AreaConfig:
    x_min: float = 0.0
    x_max: float = 500.0
    y_min: float = 0.0
    y_max: float = 500.0

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ConfigError("violated x_min < x_max")
        if not self.y_min < self.y_max:
            raise ConfigError("violated y_min < y_max")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


@dataclass(frozen=True)
class SimulationConfig:
    area: AreaConfig = field(default_factory=AreaConfig)
    nodes: int = 50
    servers: int = 5
    requests: int = 2000
    request_interval: float = 500.0
    ttl: int = 7
    link_availability: float = 0.7
    radius: float = 210.0
    vmax_kmh: float = 5.0
    direction_change_p: float = 0.0
    step_interval: float = 100.0
    link_check_interval: float = 2000.0
    hop_delay: float = 10.0
    clearance_margin: float = 1000.0
    seed: int = 0

    def __post_init__(self):
        n, m = self.nodes, self.servers
        if m < 1:
            raise ConfigError("violated servers >= 1")
        if not m < n - m:
            raise ConfigError("violated m < N - m (fewer servers than simple nodes)")
        if not 0.0 < self.link_availability < 1.0:
            raise ConfigError("violated 0 < link_availability < 1")
        if self.requests < 1:
            raise ConfigError("violated requests >= 1")
        if self.ttl < 1:
            raise ConfigError("violated ttl >= 1")
        if self.radius < 0:
            raise ConfigError("violated radius >= 0")
        if self.vmax_kmh < 0:
            raise ConfigError("violated vmax >= 0")
        if not 0.0 <= self.direction_change_p <= 1.0:
            raise ConfigError("violated 0 <= direction_change_p <= 1")
        for name in ("request_interval", "step_interval", "link_check_interval", "hop_delay"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"violated {name} > 0")
        if self.clearance_margin < 0:
            raise ConfigError("violated clearance_margin >= 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("violated 0 <= seed < 2**64")

    @property
    def v_max(self) -> float:
        """Maximal node speed in m/ms."""
        return kmh_to_internal(self.vmax_kmh)

    @property
    def source(self) -> int:
        return self.nodes

    @property
    def run_length(self) -> float:
        return self.requests * self.request_interval + self.clearance_margin

    def role(self, node: int) -> Role:
        if not 1 <= node <= self.nodes:
            raise ValueError(f"node id {node} outside 1..{self.nodes}")
        if node <= self.servers:
            return Role.SERVER
        if node == self.nodes:
            return Role.SOURCE
        return Role.SIMPLE


# parameter-file key -> (attribute path, type)
_KEYS = {
    "area_x_min": ("area.x_min", float),
    "area_x_max": ("area.x_max", float),
    "area_y_min": ("area.y_min", float),
    "area_y_max": ("area.y_max", float),
    "nodes": ("nodes", int),
    "servers": ("servers", int),
    "requests": ("requests", int),
    "request_interval_ms": ("request_interval", float),
    "ttl": ("ttl", int),
    "link_availability": ("link_availability", float),
    "radius_m": ("radius", float),
    "vmax_kmh": ("vmax_kmh", float),
    "direction_change_p": ("direction_change_p", float),
    "step_interval_ms": ("step_interval", float),
    "link_check_interval_ms": ("link_check_interval", float),
    "hop_delay_ms": ("hop_delay", float),
    "seed": ("seed", int),
}
PARAMETER_KEYS = tuple(_KEYS)


def _convert(raw: str, kind, key: str, lineno: int):
    try:
        if kind is int:
            value = int(raw, 0)
        else:
            value = float(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot read {raw!r} as {kind.__name__} for '{key}'") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"line {lineno}: '{key}' must be finite")
    return value


def parse_config(text: str, **overrides) -> SimulationConfig:
    """Parse ``key = value`` lines into a validated config.

    Blank lines and ``#`` comments are ignored, omitted keys take defaults.
    ``overrides`` are applied on top, keyed by file key.
    """
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key or not raw:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = _convert(raw, _KEYS[key][1], key, lineno)
    for key, value in overrides.items():
        if key not in _KEYS:
            raise ConfigError(f"unknown key '{key}'")
        values[key] = _KEYS[key][1](value)
    return from_mapping(values)


def from_mapping(values: dict) -> SimulationConfig:
    area_kw, top_kw = {}, {}
    for key, value in values.items():
        path = _KEYS[key][0]
        if path.startswith("area."):
            area_kw[path[5:]] = value
        else:
            top_kw[path] = value
    return SimulationConfig(area=AreaConfig(**area_kw), **top_kw)


def to_mapping(config: SimulationConfig) -> dict:
    out = {}
    for key, (path, _) in _KEYS.items():
        obj = config
        for part in path.split("."):
            obj = getattr(obj, part)
        out[key] = obj
    return out


def serialize_config(config: SimulationConfig) -> str:
    """Inverse of :func:`parse_config` (clearance_margin has no file key)."""
    return "".join(f"{key} = {value!r}\n" for key, value in to_mapping(config).items())
