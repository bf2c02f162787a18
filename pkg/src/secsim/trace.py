"""Per-run measurement records shared between the engine and the metrics.

A :class:`RawTrace` holds one repetition's application-level records plus
the physical packet accounting.  Logical records follow application data
units (UDP datagrams, TCP segments); the counters follow physical
transmissions, including acks, handshakes and retransmissions, so that the
conservation identity ``sent = delivered + drops + in_flight`` is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .packet import TransportKind
from .rules import AlertRecord

# Physical packet fates (counter keys).
FATE_DELIVERED = "delivered"
FATE_LINK_DROP = "link_drops"
FATE_OVERFLOW_DROP = "overflow_drops"
FATE_NAT_DROP = "nat_drops"
FATE_RULE_DROP = "ips_rule_drops"
DROP_FATES = (FATE_LINK_DROP, FATE_OVERFLOW_DROP, FATE_NAT_DROP, FATE_RULE_DROP)


class Rec:
    """One application data unit: send time, delivery time or final fate."""

    __slots__ = ("sent_at", "delivered_at", "drop_cause")

    def __init__(self) -> None:
        self.sent_at: float | None = None
        self.delivered_at: float | None = None
        self.drop_cause: str | None = None


@dataclass
class RawTrace:
    """Everything measured from a single repetition."""

    seed: int
    duration_s: float
    payload_bytes: int
    transport: TransportKind
    records: list[Rec]
    counters: dict[str, int]
    alerts: list[AlertRecord] = field(default_factory=list)

    @property
    def sent(self) -> int:
        return len(self.records)

    def delivered_records(self) -> list[Rec]:
        return [r for r in self.records if r.delivered_at is not None]
