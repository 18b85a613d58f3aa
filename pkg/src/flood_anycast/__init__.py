"""Discrete-event simulation of stateless flooding anycast in a mobile ad hoc network."""

from .config import AreaConfig, ConfigError, SimulationConfig, distance, kmh_to_internal, parse_config
from .engine import Simulation, run
from .metrics import Counters, MetricsRecord, finalize

__all__ = [
    "AreaConfig",
    "ConfigError",
    "Counters",
    "MetricsRecord",
    "Simulation",
    "SimulationConfig",
    "distance",
    "finalize",
    "kmh_to_internal",
    "parse_config",
    "run",
]
