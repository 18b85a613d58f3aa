"""Deterministic discrete-event core.

Events are ordered by (time, kind priority, insertion sequence). A single
``DELIVERY`` event carries every receiver of one transmission; receivers are
handled in ascending node id, which is the order separate per-receiver
events with consecutive sequence numbers would have.
"""

from __future__ import annotations

import csv
import heapq
import logging
import math
import zlib
from enum import IntEnum
from typing import Optional, Sequence

import numpy as np

from . import protocol
from .config import SimulationConfig
from .links import LinkStateTable, in_range, receivers_mask
from .metrics import Counters, MetricsRecord, finalize
from .mobility import Fleet, advance, init_placement
from .protocol import REQUEST, Broadcast, DuplicateReply, FirstReply, Packet, Unicast

log = logging.getLogger(__name__)

STREAM_LABELS = ("placement", "mobility", "link")


class SimulationError(RuntimeError):
    pass


class EventKind(IntEnum):
    MOBILITY_STEP = 0
    LINK_REFRESH = 1
    REQUEST_GEN = 2
    DELIVERY = 3


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for each named stream, derived from one seed."""
    return {
        label: np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(label.encode()),)))
        for label in STREAM_LABELS
    }


class EventQueue:
    def __init__(self):
        self._heap = []
        self._tie = 0
        self.clock = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, time: float, kind: EventKind, payload=None) -> int:
        if time < self.clock:
            raise SimulationError(f"event {kind.name} scheduled at {time} before clock {self.clock}")
        tie = self._tie
        heapq.heappush(self._heap, (time, kind, tie, payload))
        self._tie += 1
        return tie

    def items(self) -> list:
        """Pending events in processing order."""
        return sorted(self._heap, key=lambda e: e[:3])

    def pop(self):
        item = heapq.heappop(self._heap)
        self.clock = item[0]
        return item


class Simulation:
    """One run of the model. Call :meth:`run` once.

    ``initial_positions`` (sequence of (x, y), one per node id in order)
    overrides the random placement; speeds and headings are still drawn.
    ``trace=True`` keeps an event log and a packet trace and checks packet
    invariants on every delivery.
    """

    def __init__(
        self,
        config: SimulationConfig,
        *,
        initial_positions: Optional[Sequence] = None,
        trace: bool = False,
        bounce: str = "resample",
    ):
        self.config = config
        self.trace = trace
        self.bounce = bounce
        self.streams = make_streams(config.seed)
        self.fleet: Fleet = init_placement(config, self.streams["placement"])
        if initial_positions is not None:
            pos = np.asarray(initial_positions, dtype=float)
            if pos.shape != (config.nodes, 2):
                raise ValueError(f"initial_positions must have shape ({config.nodes}, 2)")
            self.fleet.x[:] = pos[:, 0]
            self.fleet.y[:] = pos[:, 1]
        self.links = LinkStateTable(config.nodes)
        self.states = protocol.make_states(config)
        self.queue = EventQueue()
        self.counters = Counters()
        self.live: dict[int, int] = {}
        self.event_log: list[tuple] = []
        self.packet_trace: list[tuple] = []
        self.link_log: list[tuple] = []
        self.trajectory: list[tuple] = []
        self._done = False

    @property
    def clock(self) -> float:
        return self.queue.clock

    @property
    def positions(self) -> list[tuple[float, float]]:
        return list(zip(self.fleet.x.tolist(), self.fleet.y.tolist()))

    # -- orchestration ---------------------------------------------------

    def run(self) -> MetricsRecord:
        if self._done:
            raise SimulationError("a Simulation can only be run once")
        self._done = True
        cfg = self.config
        end = cfg.run_length
        q = self.queue
        q.push(0.0, EventKind.LINK_REFRESH, 0)
        q.push(0.0, EventKind.REQUEST_GEN, 1)
        if cfg.step_interval <= end:
            q.push(cfg.step_interval, EventKind.MOBILITY_STEP, 1)
        if self.trace:
            self._record_trajectory(0.0)

        handlers = {
            EventKind.MOBILITY_STEP: self._on_mobility,
            EventKind.LINK_REFRESH: self._on_link_refresh,
            EventKind.REQUEST_GEN: self._on_request_gen,
            EventKind.DELIVERY: self._on_delivery,
        }
        while q:
            time, kind, tie, payload = q.pop()
            handlers[kind](time, tie, payload)
        return finalize(self.counters)

    def _periodic_next(self, kind: EventKind, period: float, k: int):
        t = (k + 1) * period
        if t <= self.config.run_length:
            self.queue.push(t, kind, k + 1)

    def _on_mobility(self, now, tie, k):
        cfg = self.config
        advance(self.fleet, cfg.step_interval, cfg.area, cfg.direction_change_p, self.streams["mobility"], self.bounce)
        if self.trace:
            self.event_log.append((now, tie, "MobilityStep", "", ""))
            self._record_trajectory(now)
        self._periodic_next(EventKind.MOBILITY_STEP, cfg.step_interval, k)

    def _on_link_refresh(self, now, tie, k):
        cfg = self.config
        self.links.refresh(cfg, self.streams["link"], now)
        if self.trace:
            self.event_log.append((now, tie, "LinkRefresh", "", ""))
            self.link_log.append((now, self.links.up_fraction()))
        self._periodic_next(EventKind.LINK_REFRESH, cfg.link_check_interval, k)

    def _on_request_gen(self, now, tie, seq):
        cfg = self.config
        if self.live.get(seq - 1):
            self.counters.overlap_warnings += 1
            log.warning("request %d still in flight when request %d is generated (t=%s ms)", seq - 1, seq, now)
        if self.trace:
            self.event_log.append((now, tie, "RequestGen", cfg.source, seq))
        source = self.states[cfg.source - 1]
        self.counters.requests_sent += 1
        self._apply(cfg.source, protocol.generate_request(source, seq, now, cfg))
        if seq < cfg.requests:
            self.queue.push(seq * cfg.request_interval, EventKind.REQUEST_GEN, seq + 1)

    def _on_delivery(self, now, tie, payload):
        sender, pkt, receivers = payload
        self.live[pkt.seq] -= 1
        is_request = pkt.kind == REQUEST
        handle = protocol.on_request if is_request else protocol.on_reply
        states = self.states
        if not self.trace:
            for r in receivers:
                actions = handle(states[r - 1], pkt, now)
                if actions:
                    self._apply(r, actions)
            return
        for r in receivers:
            self.event_log.append((now, tie, "Delivery", r, pkt.seq))
            self._trace(now, "deliver", r, pkt)
            self._audit(r, pkt)
            actions = handle(states[r - 1], pkt, now)
            if actions:
                self._apply(r, actions)
            else:
                self._trace(now, "drop", r, pkt)

    # -- transmissions -----------------------------------------------------

    def _apply(self, node: int, actions):
        c = self.counters
        for action in actions:
            if type(action) is Broadcast:
                self.broadcast(node, action.packet)
            elif type(action) is Unicast:
                self.unicast(node, action.to, action.packet)
            elif type(action) is FirstReply:
                c.requests_answered += 1
                c.sum_first_reply_hops += action.hops
                c.sum_response_time += action.response_time
            elif type(action) is DuplicateReply:
                c.duplicate_replies += 1

    def _count_transmission(self, sender: int, pkt: Packet):
        c = self.counters
        if pkt.kind == REQUEST:
            if sender == self.config.source:
                c.source_transmissions += 1
            else:
                c.request_retransmissions += 1
        else:
            c.reply_transmissions += 1

    def _schedule(self, sender: int, pkt: Packet, receivers: tuple):
        self.live[pkt.seq] = self.live.get(pkt.seq, 0) + 1
        self.queue.push(self.clock + self.config.hop_delay, EventKind.DELIVERY, (sender, pkt, receivers))

    def broadcast(self, sender: int, pkt: Packet) -> tuple:
        """Send ``pkt`` to every node that can currently hear ``sender``."""
        out = pkt.transmitted()
        self._count_transmission(sender, out)
        mask = receivers_mask(sender - 1, self.fleet.x, self.fleet.y, self.links, self.config.radius)
        receivers = tuple((mask.nonzero()[0] + 1).tolist())
        if self.trace:
            self._trace(self.clock, "broadcast", sender, out)
        if receivers:
            self._schedule(sender, out, receivers)
        return receivers

    def unicast(self, sender: int, receiver: int, pkt: Packet) -> bool:
        """Send ``pkt`` to one node; returns False if it is silently lost."""
        out = pkt.transmitted()
        self._count_transmission(sender, out)
        ok = self.can_deliver(sender, receiver)
        if self.trace:
            self._trace(self.clock, "unicast" if ok else "lost", sender, out)
        if ok:
            self._schedule(sender, out, (receiver,))
        return ok

    def can_deliver(self, sender: int, receiver: int) -> bool:
        i, j = sender - 1, receiver - 1
        x, y = self.fleet.x, self.fleet.y
        dx = float(x[i] - x[j])
        dy = float(y[i] - y[j])
        d = math.sqrt(dx * dx + dy * dy)
        return bool(in_range(d, self.config.radius)) and (d <= self.links.reliable[i, j] or bool(self.links.up[i, j]))

    # -- tracing -----------------------------------------------------------

    def _trace(self, now, event, node, pkt):
        ttl = pkt.ttl_remaining if pkt.kind == REQUEST else ""
        self.packet_trace.append((now, event, node, pkt.seq, pkt.kind, ttl, pkt.hop_count))

    def _record_trajectory(self, now):
        for i, (x, y) in enumerate(zip(self.fleet.x.tolist(), self.fleet.y.tolist()), start=1):
            self.trajectory.append((now, i, x, y))

    def _audit(self, receiver: int, pkt: Packet):
        cfg = self.config
        path = pkt.path
        if pkt.kind == REQUEST:
            ok = (
                path[0] == cfg.source
                and len(set(path)) == len(path)
                and pkt.hop_count == len(path)
                and pkt.hop_count <= cfg.ttl
                and pkt.ttl_remaining >= 1
            )
        else:
            ok = (
                path[0] == pkt.server
                and path[-1] == cfg.source
                and len(set(path)) == len(path)
                and 1 <= pkt.hop_count <= len(path) - 1
                and path[pkt.hop_count] == receiver
            )
        if not ok:
            raise SimulationError(f"packet invariant broken at node {receiver}: {pkt}")


def run(config: SimulationConfig, **kwargs) -> MetricsRecord:
    return Simulation(config, **kwargs).run()


# -- debug dumps -------------------------------------------------------------

def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_event_log(sim: Simulation, path) -> None:
    _write(path, ["time_ms", "tie", "kind", "node", "seq"], sim.event_log)


def write_packet_trace(sim: Simulation, path) -> None:
    _write(path, ["time_ms", "event", "node", "seq", "kind", "ttl", "hops"], sim.packet_trace)


def write_trajectory(sim: Simulation, path) -> None:
    _write(path, ["time_ms", "node", "x", "y"], sim.trajectory)


def write_link_log(sim: Simulation, path) -> None:
    _write(path, ["time_ms", "up_fraction"], sim.link_log)
