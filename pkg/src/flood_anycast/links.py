"""Orientation-dependent link states and the delivery predicate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SimulationConfig, distance

RELIABLE_UPPER_MIN = 5.0
RELIABLE_UPPER_MAX = 10.0


@dataclass(frozen=True)
class DirectedLinkState:
    src: int
    dst: int
    up: bool
    reliable_distance: float


class LinkStateTable:
    """One state per ordered node pair; ``up[i, j]`` is the link i -> j.

    Indices are zero-based (node id - 1). Diagonal entries are unused and
    kept at ``False`` / ``0``.
    """

    def __init__(self, n: int):
        self.n = n
        self.up = np.zeros((n, n), dtype=bool)
        self.reliable = np.zeros((n, n))
        self.epoch = None

    def refresh(self, config: SimulationConfig, rng: np.random.Generator, now: float = 0.0) -> "LinkStateTable":
        """Redraw every directed link: up ~ Bernoulli(l), reliable ~ U(0, U(5, 10))."""
        n = self.n
        up = rng.random((n, n)) < config.link_availability
        upper = rng.uniform(RELIABLE_UPPER_MIN, RELIABLE_UPPER_MAX, (n, n))
        reliable = rng.random((n, n)) * upper
        np.fill_diagonal(up, False)
        np.fill_diagonal(reliable, 0.0)
        self.up, self.reliable, self.epoch = up, reliable, now
        return self

    def state(self, src: int, dst: int) -> DirectedLinkState:
        """State of the link between node ids ``src`` -> ``dst``."""
        i, j = src - 1, dst - 1
        return DirectedLinkState(src, dst, bool(self.up[i, j]), float(self.reliable[i, j]))

    def up_fraction(self) -> float:
        n = self.n
        return float(self.up.sum()) / (n * (n - 1))


def can_deliver(src: int, dst: int, positions, table: LinkStateTable, config: SimulationConfig) -> bool:
    """True iff a transmission src -> dst gets through right now.

    ``positions`` is indexable by zero-based node index and yields (x, y).
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    d = distance(positions[src - 1], positions[dst - 1])
    i, j = src - 1, dst - 1
    return in_range(d, config.radius) and (d <= table.reliable[i, j] or bool(table.up[i, j]))


def in_range(d, radius: float):
    # R = 0 means no coverage at all, even for coincident nodes.
    return (d <= radius) & (radius > 0)


def receivers_mask(sender: int, x: np.ndarray, y: np.ndarray, table: LinkStateTable, radius: float) -> np.ndarray:
    """Vectorized :func:`can_deliver` from zero-based ``sender`` to every node."""
    if radius <= 0:
        return np.zeros(len(x), dtype=bool)
    dx = x - x[sender]
    dy = y - y[sender]
    d = np.sqrt(dx * dx + dy * dy)
    mask = (d <= radius) & ((d <= table.reliable[sender]) | table.up[sender])
    mask[sender] = False
    return mask
