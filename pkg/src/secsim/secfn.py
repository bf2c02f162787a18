"""The security function: passive tap (IDS) and inline verdict queue (IPS).

A tap observes packets and emits alerts without touching the forwarding
path.  Inline mode funnels packets through a bounded FIFO inspection queue
(the userspace-verdict-queue analogue); a full queue drops on admission and
the verdict after inspection is forward, drop, or alert-and-forward.
"""

from __future__ import annotations

import enum
from collections import deque

from .packet import Packet
from .rules import (AlertRecord, FlowState, Rule, RuleAction, RuleSet,
                    RuleVars, match_packet)


class SecMode(enum.Enum):
    IDS = "ids"
    IPS = "ips"


class Verdict(enum.Enum):
    FORWARD = "forward"
    DROP = "drop"
    ALERT_FORWARD = "alert_forward"


def verdict(matches: list[tuple[Rule, RuleAction]], mode: SecMode) -> Verdict:
    """Fold matched actions into one verdict.

    A tap never influences forwarding.  Inline precedence is
    drop > alert > pass; pass-only matches forward silently.
    """
    if mode is SecMode.IDS:
        return Verdict.FORWARD
    actions = {action for _, action in matches}
    if RuleAction.DROP in actions:
        return Verdict.DROP
    if RuleAction.ALERT in actions:
        return Verdict.ALERT_FORWARD
    return Verdict.FORWARD


def _alerts_for(matches: list[tuple[Rule, RuleAction]], final: Verdict,
                packet: Packet, now: float) -> list[AlertRecord]:
    records = []
    for rule, action in matches:
        if action is RuleAction.PASS:
            continue
        if action is RuleAction.DROP and final is Verdict.DROP:
            taken = RuleAction.DROP
        else:
            taken = RuleAction.ALERT  # drop rules downgrade to alert off-path
        records.append(AlertRecord(rule.sid, rule.options.msg, now, packet.tuple, taken))
    return records


def ids_observe(packet: Packet, ruleset: RuleSet, variables: RuleVars,
                flow_state: FlowState, now: float) -> list[AlertRecord]:
    """Tap-mode observation: alerts only, the packet itself is untouched."""
    matches = match_packet(ruleset, packet, variables, flow_state)
    return _alerts_for(matches, Verdict.FORWARD, packet, now)


class InspectionQueue:
    """Bounded FIFO in front of the inline inspector.

    ``capacity`` counts every packet held, including the one under
    inspection, so a queue of capacity K behaves as a K-slot single-server
    loss system.  ``queue_id`` is an opaque label (the kernel queue number),
    not a sizing parameter.
    """

    def __init__(self, capacity: int = 1024, queue_id: int = 4):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        self.capacity = capacity
        self.queue_id = queue_id
        self._fifo: deque[Packet] = deque()
        self.occupancy = 0
        self.enqueued = 0
        self.overflow_drops = 0
        self.serviced = 0
        self.rule_drops = 0

    def __len__(self) -> int:
        return len(self._fifo)

    def try_enqueue(self, packet: Packet) -> bool:
        """Admit if a slot is free; a full queue is a counted drop, not a fault."""
        if self.occupancy >= self.capacity:
            self.overflow_drops += 1
            return False
        self._fifo.append(packet)
        self.occupancy += 1
        self.enqueued += 1
        return True

    def head(self) -> Packet:
        return self._fifo[0]

    def pop_head(self) -> Packet:
        return self._fifo.popleft()

    def release(self) -> None:
        """Mark the in-service packet as having left the system."""
        self.occupancy -= 1


def ips_service(queue: InspectionQueue, ruleset: RuleSet, variables: RuleVars,
                flow_state: FlowState, now: float,
                mode: SecMode = SecMode.IPS) -> tuple[Packet, Verdict, list[AlertRecord]]:
    """Finish inspecting the head packet: dequeue, match, verdict.

    The caller owns timing (this runs when the sampled service time has
    elapsed) and occupancy release (the packet may still hold its slot
    through a follow-on translation stage).
    """
    packet = queue.pop_head()
    matches = match_packet(ruleset, packet, variables, flow_state)
    final = verdict(matches, mode)
    alerts = _alerts_for(matches, final, packet, now)
    queue.serviced += 1
    if final is Verdict.DROP:
        queue.rule_drops += 1
    return packet, final, alerts
