"""Extended random-direction mobility.

Nodes move in straight lines at a constant per-node speed. At every step a
node may pick a fresh heading with probability ``p``; a node that reaches
the arena border bounces back inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import AreaConfig, SimulationConfig

TWO_PI = 2.0 * math.pi

BOUNCE_RULES = ("resample", "reflect")


@dataclass(frozen=True)
class Kinematics:
    x: float
    y: float
    heading: float
    speed: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass
class Fleet:
    """Kinematic state of all nodes as parallel arrays (index = node id - 1)."""

    x: np.ndarray
    y: np.ndarray
    heading: np.ndarray
    speed: np.ndarray

    def __len__(self):
        return len(self.x)

    def node(self, i: int) -> Kinematics:
        return Kinematics(float(self.x[i]), float(self.y[i]), float(self.heading[i]), float(self.speed[i]))

    def copy(self) -> "Fleet":
        return Fleet(self.x.copy(), self.y.copy(), self.heading.copy(), self.speed.copy())


def init_placement(config: SimulationConfig, rng: np.random.Generator) -> Fleet:
    """Uniform positions, speeds uniform on (0, v_max), uniform headings."""
    n, area = config.nodes, config.area
    x = rng.uniform(area.x_min, area.x_max, n)
    y = rng.uniform(area.y_min, area.y_max, n)
    # Scaled unit draw: the stream consumed does not depend on v_max.
    speed = rng.random(n) * config.v_max
    heading = rng.random(n) * TWO_PI
    return Fleet(x, y, heading, speed)


def _fold(u: np.ndarray, lo: float, hi: float):
    """Fold coordinates back into [lo, hi] by repeated reflection.

    Returns the folded coordinates, a mask of coordinates that touched a
    border, and a mask of those whose direction along this axis ends up
    reversed (odd number of reflections).
    """
    span = hi - lo
    rel = u - lo
    k = np.floor(rel / span)
    hit = (rel < 0) | (rel > span)
    r = np.mod(rel, 2.0 * span)
    folded = np.where(r > span, 2.0 * span - r, r)
    flipped = hit & (np.mod(k, 2.0) == 1.0)
    return np.clip(lo + folded, lo, hi), hit, flipped


def advance(
    fleet: Fleet,
    dt: float,
    area: AreaConfig,
    p: float,
    rng: np.random.Generator,
    bounce: str = "resample",
) -> None:
    """Move every node one step of length ``dt`` in place.

    Border crossings are folded back (specular for position). With
    ``bounce="resample"`` a node that touched a border then draws a fresh
    heading uniformly among directions pointing back into the arena;
    ``"reflect"`` keeps the mirrored heading. Afterwards each node redraws
    its heading with probability ``p``. Speeds never change.
    """
    if bounce not in BOUNCE_RULES:
        raise ValueError(f"bounce must be one of {BOUNCE_RULES}")
    step = fleet.speed * dt
    cos_h = np.cos(fleet.heading)
    sin_h = np.sin(fleet.heading)
    x, hit_x, flip_x = _fold(fleet.x + step * cos_h, area.x_min, area.x_max)
    y, hit_y, flip_y = _fold(fleet.y + step * sin_h, area.y_min, area.y_max)
    fleet.x[:] = x
    fleet.y[:] = y

    heading = fleet.heading
    heading = np.where(flip_x, math.pi - heading, heading)
    heading = np.where(flip_y, -heading, heading)
    heading = np.mod(heading, TWO_PI)

    hit = np.flatnonzero(hit_x | hit_y)
    if bounce == "resample" and hit.size:
        fresh = rng.random(hit.size) * TWO_PI
        ref = heading[hit]
        # mirror the fresh draw onto the inward side of each wall touched
        wrong_x = hit_x[hit] & (np.sign(np.cos(fresh)) != np.sign(np.cos(ref)))
        fresh = np.where(wrong_x, math.pi - fresh, fresh)
        wrong_y = hit_y[hit] & (np.sign(np.sin(fresh)) != np.sign(np.sin(ref)))
        fresh = np.where(wrong_y, -fresh, fresh)
        heading[hit] = np.mod(fresh, TWO_PI)

    if p > 0.0:
        change = rng.random(len(heading)) < p
        k = int(change.sum())
        if k:
            heading[change] = rng.random(k) * TWO_PI
    # np.mod of a tiny negative angle can round up to exactly 2*pi
    heading[heading >= TWO_PI] = 0.0
    fleet.heading[:] = heading


def step(
    k: Kinematics,
    config: SimulationConfig,
    rng: np.random.Generator,
    bounce: str = "resample",
) -> Kinematics:
    """Advance a single node by one step interval."""
    fleet = Fleet(np.array([k.x]), np.array([k.y]), np.array([k.heading]), np.array([k.speed]))
    advance(fleet, config.step_interval, config.area, config.direction_change_p, rng, bounce)
    return fleet.node(0)
