"""Per-node anycast flooding state machines.

Handlers never touch the network directly. They return a list of actions
(``Broadcast``, ``Unicast``) and accounting notes (``FirstReply``,
``DuplicateReply``) that the engine carries out.

``hop_count`` on a received packet is the number of links it has crossed;
the engine increments it on every transmission.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from .config import Role, SimulationConfig

REQUEST = "request"
REPLY = "reply"


class RouteError(RuntimeError):
    """A reply reached a node that is not on its route (engine bug)."""


@dataclass(frozen=True, slots=True)
class Packet:
    kind: str
    seq: int
    ttl_remaining: int
    path: tuple
    hop_count: int
    origin_time: float
    server: Optional[int] = None

    def transmitted(self) -> "Packet":
        """Copy with one more link crossed."""
        return Packet(self.kind, self.seq, self.ttl_remaining, self.path, self.hop_count + 1, self.origin_time, self.server)


class Broadcast(NamedTuple):
    packet: Packet


class Unicast(NamedTuple):
    to: int
    packet: Packet


class FirstReply(NamedTuple):
    seq: int
    hops: int
    response_time: float


class DuplicateReply(NamedTuple):
    seq: int


Action = Union[Broadcast, Unicast, FirstReply, DuplicateReply]


@dataclass
class LedgerEntry:
    send_time: float
    first_reply_time: Optional[float] = None
    hops: Optional[int] = None
    duplicates: int = 0


@dataclass
class NodeProtocolState:
    node: int
    role: Role
    seen_requests: set = field(default_factory=set)
    replied_requests: set = field(default_factory=set)
    forwarded_replies: set = field(default_factory=set)
    ledger: dict = field(default_factory=dict)  # source only: seq -> LedgerEntry


def make_states(config: SimulationConfig) -> list[NodeProtocolState]:
    return [NodeProtocolState(i, config.role(i)) for i in range(1, config.nodes + 1)]


def generate_request(source: NodeProtocolState, seq: int, now: float, config: SimulationConfig) -> list[Action]:
    if source.role is not Role.SOURCE:
        raise ValueError(f"node {source.node} is not the source")
    if not 1 <= seq <= config.requests:
        raise ValueError(f"seq {seq} outside 1..{config.requests}")
    expected = (seq - 1) * config.request_interval
    if now != expected:
        raise ValueError(f"seq {seq} must be generated at t={expected}, not {now}")
    source.ledger[seq] = LedgerEntry(send_time=now)
    pkt = Packet(REQUEST, seq, config.ttl, (source.node,), 0, now)
    return [Broadcast(pkt)]


def on_request(state: NodeProtocolState, pkt: Packet, now: float) -> list[Action]:
    role, seq = state.role, pkt.seq
    if role is Role.SOURCE:
        return []
    if role is Role.SERVER:
        if seq in state.replied_requests:
            return []
        state.replied_requests.add(seq)
        route = (state.node,) + pkt.path[::-1]
        reply = Packet(REPLY, seq, 0, route, 0, pkt.origin_time, server=state.node)
        return [Unicast(route[1], reply)]
    if seq in state.seen_requests:
        return []
    state.seen_requests.add(seq)
    ttl = pkt.ttl_remaining - 1
    if ttl < 1:
        return []
    return [Broadcast(Packet(REQUEST, seq, ttl, pkt.path + (state.node,), pkt.hop_count, pkt.origin_time))]


def on_reply(state: NodeProtocolState, pkt: Packet, now: float) -> list[Action]:
    route, h = pkt.path, pkt.hop_count
    if not 0 < h < len(route) or route[h] != state.node:
        raise RouteError(f"reply seq {pkt.seq} delivered to node {state.node} at hop {h} of route {route}")
    if state.role is Role.SOURCE:
        if h != len(route) - 1:
            raise RouteError(f"reply seq {pkt.seq} reached the source early at hop {h} of {route}")
        entry = state.ledger[pkt.seq]
        if entry.first_reply_time is None:
            entry.first_reply_time = now
            entry.hops = h
            return [FirstReply(pkt.seq, h, now - pkt.origin_time)]
        entry.duplicates += 1
        return [DuplicateReply(pkt.seq)]
    if state.role is Role.SERVER:
        raise RouteError(f"server {state.node} is never a relay (reply seq {pkt.seq})")
    if pkt.seq in state.forwarded_replies:
        return []
    state.forwarded_replies.add(pkt.seq)
    return [Unicast(route[h + 1], pkt)]
