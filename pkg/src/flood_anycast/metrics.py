"""Run counters and the five derived performance metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

# duplicate_ratio and relative_traffic are both normalized per request sent
DUPLICATE_DENOMINATOR = "requests_sent"

METRIC_NAMES = ("response_ratio", "avg_hops", "relative_traffic", "avg_response_time", "duplicate_ratio")


@dataclass
class Counters:
    requests_sent: int = 0
    requests_answered: int = 0
    source_transmissions: int = 0
    request_retransmissions: int = 0
    reply_transmissions: int = 0
    sum_first_reply_hops: int = 0
    sum_response_time: float = 0.0
    duplicate_replies: int = 0
    overlap_warnings: int = 0

    @property
    def total_transmissions_by_others(self) -> int:
        return self.request_retransmissions + self.reply_transmissions

    def snapshot(self) -> tuple:
        return tuple(asdict(self).values())


@dataclass(frozen=True)
class MetricsRecord:
    requests_sent: int
    requests_answered: int
    total_transmissions_by_others: int
    request_retransmissions: int
    reply_transmissions: int
    sum_first_reply_hops: int
    sum_response_time: float
    duplicate_replies: int
    response_ratio: float
    avg_hops: Optional[float]
    relative_traffic: float
    avg_response_time: Optional[float]
    duplicate_ratio: float

    def metrics(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def finalize(c: Counters) -> MetricsRecord:
    sent, answered = c.requests_sent, c.requests_answered
    if sent < 1:
        raise ValueError("no requests were sent")
    if answered > sent:
        raise ValueError("more requests answered than sent")
    others = c.total_transmissions_by_others
    return MetricsRecord(
        requests_sent=sent,
        requests_answered=answered,
        total_transmissions_by_others=others,
        request_retransmissions=c.request_retransmissions,
        reply_transmissions=c.reply_transmissions,
        sum_first_reply_hops=c.sum_first_reply_hops,
        sum_response_time=c.sum_response_time,
        duplicate_replies=c.duplicate_replies,
        response_ratio=answered / sent,
        avg_hops=c.sum_first_reply_hops / answered if answered else None,
        relative_traffic=others / sent,
        avg_response_time=c.sum_response_time / answered if answered else None,
        duplicate_ratio=c.duplicate_replies / sent,
    )
