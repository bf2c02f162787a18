"""Deterministic discrete-event engine: event loop, links, nodes, chains.

The event loop is strictly single-threaded; events execute in (time, seq)
order with ``seq`` a global tiebreaker, so identical (config, seed) pairs
replay bit-identically.  A chain is a linear node list; packets move uplink
(source towards server) or downlink (replies).  The one interesting node is
the security VNF: a single CPU serves, in arrival order, inline inspection
followed by source NAT for uplink traffic and reverse NAT for downlink
traffic.  A passive tap observes uplink packets with zero forwarding-path
cost.  The tunneled chain variant adds encapsulation overhead on the access
segment and a per-packet (de|en)capsulation CPU step at the user-plane node.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush
from random import Random
from typing import Callable, NamedTuple

from .config import ExperimentConfig
from .nat import NatTable
from .packet import (Address, CidrBlock, FiveTuple, Packet, Proto, TcpFlag,
                     TransportKind, wire_size)
from .rules import FlowState, RuleSet, RuleVars, default_ruleset
from .secfn import InspectionQueue, SecMode, Verdict, ids_observe, ips_service
from .seeding import STREAM_INSPECTION, mix64
from .trace import (FATE_DELIVERED, FATE_LINK_DROP, FATE_NAT_DROP,
                    FATE_OVERFLOW_DROP, FATE_RULE_DROP, RawTrace, Rec)

# Event kinds.
ARRIVAL = "arrival"
SERVICE_COMPLETE = "service_complete"
LINK_FREE = "link_free"
TIMER = "timer"
APP_SEND = "app_send"


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled into the past (a programming fault)."""


class Event(NamedTuple):
    time: float
    seq: int
    kind: str
    fn: Callable[[], None]


class Simulator:
    """Event heap with a monotone clock and optional execution-trace hash."""

    def __init__(self, trace: bool = False):
        self.now = 0.0
        self._heap: list[Event] = []
        self._next_seq = 0
        self._hash = hashlib.sha256() if trace else None

    def schedule(self, time_us: float, kind: str, fn: Callable[[], None]) -> Event:
        if time_us < self.now:
            raise SchedulingError(f"cannot schedule {kind} at {time_us} < now {self.now}")
        event = Event(time_us, self._next_seq, kind, fn)
        self._next_seq += 1
        heappush(self._heap, event)
        return event

    def run_until(self, t_end: float) -> int:
        """Execute events with time <= t_end; returns the number processed."""
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before now {self.now}")
        processed = 0
        heap = self._heap
        digest = self._hash
        while heap and heap[0].time <= t_end:
            event = heappop(heap)
            self.now = event.time
            if digest is not None:
                digest.update(f"{event.time!r}:{event.seq}:{event.kind}\n".encode())
            event.fn()
            processed += 1
        self.now = t_end
        return processed

    def trace_hash(self) -> str | None:
        return self._hash.hexdigest() if self._hash is not None else None


@dataclass(frozen=True)
class PlacementProfile:
    """Service-time multipliers per placement; containers are the baseline."""

    vm: float = 1.5
    container: float = 1.0

    def multiplier(self, placement: str) -> float:
        if placement == "vm":
            return self.vm
        if placement == "container":
            return self.container
        raise ValueError(f"unknown placement {placement!r}")


class Link:
    """Serializing point-to-point link; transmissions queue on busy_until."""

    __slots__ = ("name", "bandwidth_bps", "prop_delay_us", "buffer_packets",
                 "busy_until", "pending", "drops")

    def __init__(self, name: str, bandwidth_bps: float, prop_delay_us: float,
                 buffer_packets: int | None = None):
        if bandwidth_bps <= 0:
            raise ValueError(f"link {name}: bandwidth must be > 0")
        if prop_delay_us < 0:
            raise ValueError(f"link {name}: propagation delay must be >= 0")
        self.name = name
        self.bandwidth_bps = bandwidth_bps
        self.prop_delay_us = prop_delay_us
        self.buffer_packets = buffer_packets
        self.busy_until = 0.0
        self.pending = 0
        self.drops = 0

    def serialization_us(self, wire_bytes: int) -> float:
        return wire_bytes * 8e6 / self.bandwidth_bps


@dataclass(frozen=True)
class Node:
    name: str
    role: str  # client | server | vnf | ue | gnb | upf


@dataclass(frozen=True)
class ChainPreset:
    roles: tuple[str, ...]
    sec_mode: str          # default mode; config may override
    tunneled: bool
    source_addr: str
    server_addr: str
    nat_external: str
    home_net: str


CHAIN_PRESETS = {
    "scenario1_ids": ChainPreset(("client", "vnf", "server"), "ids", False,
                                 "192.168.122.10", "10.10.1.10", "10.10.1.1",
                                 "10.10.1.0/24"),
    "scenario2_ips": ChainPreset(("client", "vnf", "server"), "ips", False,
                                 "192.168.122.10", "10.10.1.10", "10.10.1.1",
                                 "10.10.1.0/24"),
    "fiveg_ids": ChainPreset(("ue", "gnb", "upf", "server"), "ids", True,
                             "10.45.0.2", "10.10.1.10", "10.10.1.1",
                             "10.10.1.0/24"),
    "fiveg_ips": ChainPreset(("ue", "gnb", "upf", "server"), "ips", True,
                             "10.45.0.2", "10.10.1.10", "10.10.1.1",
                             "10.10.1.0/24"),
}


# --------------------------------------------------------------------------
# TCP congestion state (Reno-style, packet-counted)

SRTT_ALPHA = 0.125
MIN_RTO_US = 1000.0
# Before any RTT sample exists the timer must not undercut plausible path
# delays, or connection setup fires spurious retransmissions.
INITIAL_RTO_US = 10000.0


@dataclass
class TcpState:
    """Congestion state for one closed-loop sender.

    Congestion avoidance uses ack counting: every full window of acks grows
    cwnd by one packet, the bookkeeping form of "+1/cwnd per ack" that keeps
    cwnd integral.
    """

    cwnd: float = 1.0
    ssthresh: float = 64.0
    srtt_us: float | None = None
    dup_acks: int = 0
    ca_acks: int = 0

    @property
    def rto_us(self) -> float:
        if self.srtt_us is None:
            return INITIAL_RTO_US
        return max(2.0 * self.srtt_us, MIN_RTO_US)

    def observe_rtt(self, sample_us: float) -> None:
        if self.srtt_us is None:
            self.srtt_us = sample_us
        else:
            self.srtt_us = (1.0 - SRTT_ALPHA) * self.srtt_us + SRTT_ALPHA * sample_us


def tcp_on_ack(state: TcpState, acks: int = 1) -> int:
    """Grow cwnd for newly-acknowledged data; returns the send credit."""
    for _ in range(acks):
        if state.cwnd < state.ssthresh:
            state.cwnd += 1.0
        else:
            state.ca_acks += 1
            if state.ca_acks >= state.cwnd:
                state.cwnd += 1.0
                state.ca_acks = 0
    return int(state.cwnd)


def tcp_on_loss(state: TcpState, kind: str) -> int:
    """Multiplicative decrease: kind is 'rto' or 'fast_retransmit'."""
    state.ssthresh = max(state.cwnd / 2.0, 2.0)
    state.cwnd = 1.0 if kind == "rto" else state.ssthresh
    state.ca_acks = 0
    state.dup_acks = 0
    return int(state.cwnd)


# --------------------------------------------------------------------------
# Capacity helpers (used by sweeps and tests to pick operating points)

def placement_profile(cfg: ExperimentConfig) -> PlacementProfile:
    return PlacementProfile(vm=cfg.vm_multiplier, container=cfg.container_multiplier)


def uplink_cpu_cost_us(cfg: ExperimentConfig, n_rules: int) -> float:
    """Mean VNF CPU time charged to one uplink packet."""
    preset = CHAIN_PRESETS[cfg.scenario]
    mult = placement_profile(cfg).multiplier(cfg.placement)
    cost = cfg.nat_cost_us
    if preset.tunneled:
        cost += cfg.tunnel_cost_us
    mode = cfg.effective_mode
    if mode == "ips":
        cost += cfg.ips_cost_us + n_rules * cfg.rule_match_cost_us
    elif mode == "ids" and cfg.ids_shared_cpu:
        cost += n_rules * cfg.rule_match_cost_us
    return cost * mult


def service_capacity_pps(cfg: ExperimentConfig, n_rules: int) -> float:
    """Uplink saturation rate of the VNF CPU for this configuration."""
    return 1e6 / uplink_cpu_cost_us(cfg, n_rules)


def link_capacity_pps(cfg: ExperimentConfig, wire_bytes: int) -> float:
    return cfg.link_bandwidth_bps / (wire_bytes * 8)


# --------------------------------------------------------------------------
# World: one fully-wired chain plus per-run mutable state

_WORK_INSPECT = 0
_WORK_NAT_OUT = 1
_WORK_NAT_IN = 2


class World:
    """A single simulation run over one chain preset."""

    def __init__(self, cfg: ExperimentConfig, seed: int, arrivals_us: list[float],
                 ruleset: RuleSet | None = None, trace_events: bool = False):
        cfg.validate()
        preset = CHAIN_PRESETS[cfg.scenario]
        self.cfg = cfg
        self.seed = seed
        self.preset = preset
        self.arrivals_us = arrivals_us
        self.sim = Simulator(trace=trace_events)

        mode = cfg.effective_mode
        self.sec_mode = None if mode == "none" else SecMode(mode)
        self.ruleset = ruleset if ruleset is not None else default_ruleset()
        self.variables = RuleVars.defaults(CidrBlock.parse(preset.home_net))
        self.flow_state = FlowState()

        self.nodes = [Node(f"{role}{i}" if preset.roles.count(role) > 1 else role, role)
                      for i, role in enumerate(preset.roles)]
        self.links = [Link(f"{self.nodes[i].name}-{self.nodes[i + 1].name}",
                           cfg.link_bandwidth_bps, cfg.link_prop_delay_us,
                           cfg.link_buffer_packets)
                      for i in range(len(self.nodes) - 1)]
        self.vnf_idx = next(i for i, n in enumerate(self.nodes) if n.role in ("vnf", "upf"))
        self.src_idx = 0
        self.dst_idx = len(self.nodes) - 1

        self.source_addr = Address.parse(preset.source_addr)
        self.server_addr = Address.parse(preset.server_addr)
        self.nat = NatTable(Address.parse(preset.nat_external), cfg.nat_capacity,
                            cfg.nat_idle_timeout_s * 1e6)
        self.iq = InspectionQueue(cfg.queue_capacity)

        self.mult = placement_profile(cfg).multiplier(cfg.placement)
        self._rng_inspect = Random(mix64(seed, STREAM_INSPECTION))
        self._det_service = cfg.service_dist == "det"
        self._rule_cost_us = len(self.ruleset) * cfg.rule_match_cost_us * self.mult
        self._nat_cost_us = cfg.nat_cost_us * self.mult
        self._ips_mean_us = cfg.ips_cost_us * self.mult
        self._tunnel_cost_us = (cfg.tunnel_cost_us * self.mult) if preset.tunneled else 0.0
        self._ids_cpu_cost_us = self._rule_cost_us if cfg.ids_shared_cpu else 0.0

        self.transport = (TransportKind.TCP_CLOSED_LOOP if cfg.transport == "tcp"
                          else TransportKind.UDP_OPEN_LOOP)
        self.proto = Proto.TCP if cfg.transport == "tcp" else Proto.UDP
        self.flow_tuple = FiveTuple(self.source_addr, self.server_addr,
                                    cfg.sport, cfg.dport, self.proto)

        # Measurement state.
        self.records: list[Rec] = []
        self.alerts = []
        self.counters = {FATE_DELIVERED: 0, FATE_LINK_DROP: 0, FATE_OVERFLOW_DROP: 0,
                         FATE_NAT_DROP: 0, FATE_RULE_DROP: 0, "sent": 0}
        self._live: set[int] = set()
        self._next_packet_id = 0

        # VNF CPU.
        self._cpu_busy = False
        self._cpu_work: deque = deque()

        # TCP endpoint state.
        self._tcp_phase = "closed"          # closed | syn_sent | established
        self._send_queue: deque[int] = deque()
        self._in_flight: dict[int, list] = {}   # seq -> [first_sent_at, retx]
        self._snd_una = 0
        self._rto_gen = 0
        self._rto_armed = False
        self.tcp = TcpState()
        self._recv_next = 0
        self._recv_buffer: set[int] = set()

    # -- packet bookkeeping ------------------------------------------------

    def _new_packet(self, tuple_: FiveTuple, payload: int, flags: TcpFlag | None,
                    app_seq: int | None, origin_idx: int) -> Packet:
        pid = self._next_packet_id
        self._next_packet_id += 1
        pkt = Packet(id=pid, tuple=tuple_, kind=self.transport,
                     payload_bytes=payload, created_at=self.sim.now,
                     tunneled=self.preset.tunneled and origin_idx == self.src_idx,
                     tcp_flags=flags, app_seq=app_seq)
        pkt = pkt.with_hop(self.nodes[origin_idx].name, self.sim.now)
        self._live.add(pid)
        self.counters["sent"] += 1
        return pkt

    def _finish(self, packet_id: int, fate: str) -> None:
        self._live.remove(packet_id)
        self.counters[fate] += 1

    @property
    def in_flight_at_end(self) -> int:
        return len(self._live)

    # -- links ---------------------------------------------------------------

    def transmit(self, link: Link, pkt: Packet, dest_idx: int, direction: int) -> None:
        if link.buffer_packets is not None and link.pending >= link.buffer_packets:
            link.drops += 1
            self._finish(pkt.id, FATE_LINK_DROP)
            return
        now = self.sim.now
        serialization = link.serialization_us(wire_size(pkt))
        start = max(now, link.busy_until)
        link.busy_until = start + serialization
        if link.buffer_packets is not None:
            link.pending += 1
            self.sim.schedule(start + serialization, LINK_FREE,
                              _make_link_release(link))
        arrival = start + serialization + link.prop_delay_us
        self.sim.schedule(arrival, ARRIVAL,
                          _make_arrival(self, dest_idx, pkt, direction))

    def _forward(self, from_idx: int, pkt: Packet, direction: int) -> None:
        link = self.links[from_idx] if direction > 0 else self.links[from_idx - 1]
        self.transmit(link, pkt, from_idx + direction, direction)

    # -- node processing -----------------------------------------------------

    def _on_arrival(self, idx: int, pkt: Packet, direction: int) -> None:
        pkt = pkt.with_hop(self.nodes[idx].name, self.sim.now)
        if idx == self.vnf_idx:
            if direction > 0:
                self._vnf_uplink(pkt)
            else:
                self._vnf_downlink(pkt)
        elif direction > 0 and idx == self.dst_idx:
            self._server_receive(pkt)
        elif direction < 0 and idx == self.src_idx:
            self._client_receive(pkt)
        else:
            # Non-VNF relay: pure forwarding, zero service time.
            self._forward(idx, pkt, direction)

    def _vnf_uplink(self, pkt: Packet) -> None:
        if self.sec_mode is SecMode.IDS:
            # Tap: observe and alert off-path; forwarding cost is NAT only.
            self.flow_state.observe(pkt.tuple)
            self.alerts.extend(ids_observe(pkt, self.ruleset, self.variables,
                                           self.flow_state, self.sim.now))
        if self.sec_mode is SecMode.IPS:
            if not self.iq.try_enqueue(pkt):
                self._finish(pkt.id, FATE_OVERFLOW_DROP)
                return
            self._cpu_work.append((_WORK_INSPECT, None))
        else:
            self._cpu_work.append((_WORK_NAT_OUT, pkt))
        self._cpu_kick()

    def _vnf_downlink(self, pkt: Packet) -> None:
        self._cpu_work.append((_WORK_NAT_IN, pkt))
        self._cpu_kick()

    def _inspection_time_us(self) -> float:
        if self._det_service:
            base = self._ips_mean_us
        else:
            base = self._rng_inspect.expovariate(1.0 / self._ips_mean_us) \
                if self._ips_mean_us > 0 else 0.0
        return base + self._rule_cost_us

    def _cpu_kick(self) -> None:
        if self._cpu_busy or not self._cpu_work:
            return
        self._cpu_busy = True
        work, payload = self._cpu_work.popleft()
        now = self.sim.now
        if work == _WORK_INSPECT:
            service = self._tunnel_cost_us + self._inspection_time_us()
            self.sim.schedule(now + service, SERVICE_COMPLETE, self._inspect_done)
        elif work == _WORK_NAT_OUT:
            service = self._tunnel_cost_us + self._nat_cost_us + self._ids_cpu_cost_us
            self.sim.schedule(now + service, SERVICE_COMPLETE,
                              _make_service_done(self._nat_out_done, payload))
        else:
            service = self._nat_cost_us + self._tunnel_cost_us
            self.sim.schedule(now + service, SERVICE_COMPLETE,
                              _make_service_done(self._nat_in_done, payload))

    def _cpu_next(self) -> None:
        self._cpu_busy = False
        self._cpu_kick()

    def _inspect_done(self) -> None:
        self.flow_state.observe(self.iq.head().tuple)
        pkt, final, alerts = ips_service(self.iq, self.ruleset, self.variables,
                                         self.flow_state, self.sim.now)
        self.alerts.extend(alerts)
        if final is Verdict.DROP:
            self.iq.release()
            self._finish(pkt.id, FATE_RULE_DROP)
            self._cpu_next()
            return
        # Forwarded packets continue straight into the NAT stage on the same CPU.
        if self._nat_cost_us > 0:
            self.sim.schedule(self.sim.now + self._nat_cost_us, SERVICE_COMPLETE,
                              _make_service_done(self._ips_nat_done, pkt))
        else:
            self._ips_nat_done(pkt)

    def _ips_nat_done(self, pkt: Packet) -> None:
        self.iq.release()
        self._nat_out_done(pkt)

    def _nat_out_done(self, pkt: Packet) -> None:
        translated = self.nat.translate_outbound(pkt, self.sim.now)
        if translated is None:
            self._finish(pkt.id, FATE_NAT_DROP)
        else:
            if translated.tunneled:
                translated = translated.with_tunneled(False)
            self._forward(self.vnf_idx, translated, +1)
        self._cpu_next()

    def _nat_in_done(self, pkt: Packet) -> None:
        inner = self.nat.translate_inbound(pkt, self.sim.now)
        if inner is None:
            self._finish(pkt.id, FATE_NAT_DROP)
        else:
            self.flow_state.observe(inner.tuple)
            if self.preset.tunneled:
                inner = inner.with_tunneled(True)
            self._forward(self.vnf_idx, inner, -1)
        self._cpu_next()

    # -- endpoints -------------------------------------------------------------

    def _server_receive(self, pkt: Packet) -> None:
        self._finish(pkt.id, FATE_DELIVERED)
        if self.transport is TransportKind.UDP_OPEN_LOOP:
            rec = self.records[pkt.app_seq]
            if rec.delivered_at is None:
                rec.delivered_at = self.sim.now
            return
        self._server_receive_tcp(pkt)

    def _server_receive_tcp(self, pkt: Packet) -> None:
        flags = pkt.tcp_flags
        if flags is TcpFlag.SYN:
            self._server_send(pkt, TcpFlag.SYN_ACK, 0)
            return
        if flags is TcpFlag.DATA:
            seq = pkt.app_seq
            rec = self.records[seq]
            if rec.delivered_at is None:
                rec.delivered_at = self.sim.now
            advanced = False
            if seq == self._recv_next:
                self._recv_next += 1
                while self._recv_next in self._recv_buffer:
                    self._recv_buffer.discard(self._recv_next)
                    self._recv_next += 1
                advanced = True
            elif seq > self._recv_next:
                self._recv_buffer.add(seq)
            self._server_send(pkt, TcpFlag.ACK if advanced else TcpFlag.DUP_ACK,
                              self._recv_next)
            return
        # Bare handshake ack: connection bookkeeping only.

    def _server_send(self, cause: Packet, flags: TcpFlag, ack_no: int) -> None:
        reply = self._new_packet(cause.tuple.reversed(), 0, flags, ack_no, self.dst_idx)
        self._forward(self.dst_idx, reply, -1)

    def _client_receive(self, pkt: Packet) -> None:
        self._finish(pkt.id, FATE_DELIVERED)
        flags = pkt.tcp_flags
        if flags is TcpFlag.SYN_ACK:
            if self._tcp_phase != "established":
                self._tcp_phase = "established"
                # The handshake timer is done; a stale one firing mid-flow
                # would masquerade as a data timeout.
                self._disarm_rto()
            self._client_send(TcpFlag.ACK, 0, None)
            self._tcp_pump()
        elif flags in (TcpFlag.ACK, TcpFlag.DUP_ACK):
            self._tcp_on_ack_packet(pkt.app_seq)

    # -- application sends -------------------------------------------------------

    def _app_send_udp(self, app_seq: int) -> None:
        rec = self.records[app_seq]
        rec.sent_at = self.sim.now
        pkt = self._new_packet(self.flow_tuple, self.cfg.payload_bytes, None,
                               app_seq, self.src_idx)
        self._forward(self.src_idx, pkt, +1)

    def _app_offer_tcp(self, app_seq: int) -> None:
        self._send_queue.append(app_seq)
        if self._tcp_phase == "closed":
            self._tcp_phase = "syn_sent"
            self._client_send(TcpFlag.SYN, None, None)
            self._arm_rto()
        elif self._tcp_phase == "established":
            self._tcp_pump()

    def _client_send(self, flags: TcpFlag, ack_no: int | None, seq: int | None) -> None:
        payload = self.cfg.payload_bytes if flags is TcpFlag.DATA else 0
        app_seq = seq if flags is TcpFlag.DATA else ack_no
        pkt = self._new_packet(self.flow_tuple, payload, flags, app_seq, self.src_idx)
        self._forward(self.src_idx, pkt, +1)

    def _tcp_pump(self) -> None:
        sent_any = False
        while self._send_queue and len(self._in_flight) < int(self.tcp.cwnd):
            seq = self._send_queue.popleft()
            rec = self.records[seq]
            if rec.sent_at is None:
                rec.sent_at = self.sim.now
            self._in_flight[seq] = [self.sim.now, 0]
            self._client_send(TcpFlag.DATA, None, seq)
            sent_any = True
        if sent_any and not self._rto_armed:
            self._arm_rto()

    def _retransmit(self, seq: int) -> None:
        info = self._in_flight.get(seq)
        if info is None:
            return
        info[1] += 1
        self._client_send(TcpFlag.DATA, None, seq)
        self._arm_rto()

    def _tcp_on_ack_packet(self, ack_no: int) -> None:
        if self._tcp_phase != "established":
            return
        if ack_no > self._snd_una:
            infos = [self._in_flight.pop(seq, None)
                     for seq in range(self._snd_una, ack_no)]
            # Sample RTT only from unambiguous acks: if the acked range holds
            # any retransmitted segment, a hole just filled and the older
            # segments' apparent delays include the whole recovery time.
            if all(info is not None and info[1] == 0 for info in infos):
                for info in infos:
                    self.tcp.observe_rtt(self.sim.now - info[0])
            self._snd_una = ack_no
            self.tcp.dup_acks = 0
            tcp_on_ack(self.tcp, 1)
            if self._in_flight:
                self._arm_rto()
            else:
                self._disarm_rto()
            self._tcp_pump()
        elif ack_no == self._snd_una and self._in_flight:
            self.tcp.dup_acks += 1
            if self.tcp.dup_acks == 3:
                tcp_on_loss(self.tcp, "fast_retransmit")
                self._retransmit(self._snd_una)

    def _arm_rto(self) -> None:
        self._rto_gen += 1
        self._rto_armed = True
        gen = self._rto_gen
        self.sim.schedule(self.sim.now + self.tcp.rto_us, TIMER,
                          _make_rto(self, gen))

    def _disarm_rto(self) -> None:
        self._rto_gen += 1
        self._rto_armed = False

    def _on_rto(self) -> None:
        if self._tcp_phase == "syn_sent":
            self._client_send(TcpFlag.SYN, None, None)
            self._arm_rto()
            return
        if not self._in_flight:
            self._rto_armed = False
            return
        tcp_on_loss(self.tcp, "rto")
        self._retransmit(self._snd_una)

    # -- run -----------------------------------------------------------------

    def _schedule_app_sends(self) -> None:
        udp = self.transport is TransportKind.UDP_OPEN_LOOP
        for app_seq, t in enumerate(self.arrivals_us):
            self.records.append(Rec())
            if udp:
                self.sim.schedule(t, APP_SEND, _make_app_send(self._app_send_udp, app_seq))
            else:
                self.sim.schedule(t, APP_SEND, _make_app_send(self._app_offer_tcp, app_seq))

    def _schedule_nat_sweep(self, horizon_us: float) -> None:
        period = 1e6

        def sweep() -> None:
            self.nat.expire_bindings(self.sim.now)
            if self.sim.now + period <= horizon_us:
                self.sim.schedule(self.sim.now + period, TIMER, sweep)

        if period <= horizon_us:
            self.sim.schedule(period, TIMER, sweep)

    def run(self) -> RawTrace:
        horizon = (self.cfg.duration_s + self.cfg.drain_window_s) * 1e6
        self._schedule_app_sends()
        self._schedule_nat_sweep(horizon)
        self.sim.run_until(horizon)

        counters = dict(self.counters)
        counters["in_flight_at_end"] = self.in_flight_at_end
        counters["iq_enqueued"] = self.iq.enqueued
        counters["iq_serviced"] = self.iq.serviced
        counters["nat_unsolicited_drops"] = self.nat.unsolicited_drops
        counters["nat_peak_bindings"] = self.nat.peak_bindings
        records = [r for r in self.records if r.sent_at is not None]
        return RawTrace(seed=self.seed, duration_s=self.cfg.duration_s,
                        payload_bytes=self.cfg.payload_bytes, transport=self.transport,
                        records=records, counters=counters, alerts=list(self.alerts))


# Closure factories: default-arg binding keeps the hot path allocation-light
# and avoids late-binding surprises.

def _make_link_release(link: Link):
    def fn() -> None:
        link.pending -= 1
    return fn


def _make_arrival(world: World, idx: int, pkt: Packet, direction: int):
    def fn() -> None:
        world._on_arrival(idx, pkt, direction)
    return fn


def _make_service_done(handler, pkt: Packet):
    def fn() -> None:
        handler(pkt)
    return fn


def _make_app_send(handler, app_seq: int):
    def fn() -> None:
        handler(app_seq)
    return fn


def _make_rto(world: World, gen: int):
    def fn() -> None:
        if gen == world._rto_gen:
            world._on_rto()
    return fn


def build_world(cfg: ExperimentConfig, seed: int, arrivals_us: list[float],
                ruleset: RuleSet | None = None, trace_events: bool = False) -> World:
    return World(cfg, seed, arrivals_us, ruleset=ruleset, trace_events=trace_events)
