"""Source NAT with a bounded binding table (masquerade-style).

Outbound flows are rewritten to a single external address with a per-flow
port binding; replies are mapped back through the binding.  Ports are
allocated lowest-free-first so runs are reproducible; real masquerading
prefers the original source port, which would make results depend on
ephemeral port choice.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .packet import Address, FiveTuple, Packet

DEFAULT_PORT_LO = 1024
DEFAULT_PORT_HI = 65535


@dataclass
class NatBinding:
    inside: FiveTuple
    outside_port: int
    last_active: float  # microseconds


class NatTable:
    """Live source-NAT bindings plus drop counters.

    ``capacity`` bounds live bindings; the port pool bounds them further per
    protocol.  ``idle_timeout_us`` ages bindings out; a stale binding is also
    treated as gone when touched, so replies after the timeout are dropped
    even if no sweep ran.
    """

    def __init__(self, external_addr: Address, capacity: int = 4096,
                 idle_timeout_us: float = 30e6,
                 port_lo: int = DEFAULT_PORT_LO, port_hi: int = DEFAULT_PORT_HI):
        if capacity < 0:
            raise ValueError("capacity must be >= 0")
        if not 0 < port_lo <= port_hi <= 0xFFFF:
            raise ValueError(f"bad port pool [{port_lo}, {port_hi}]")
        self.external_addr = external_addr
        self.capacity = capacity
        self.idle_timeout_us = idle_timeout_us
        self.port_lo = port_lo
        self.port_hi = port_hi

        self._by_inside: dict[FiveTuple, NatBinding] = {}
        self._by_outside: dict[tuple, NatBinding] = {}  # (proto, outside_port)
        self._freed_ports: list[int] = []  # min-heap of returned ports
        self._next_port = port_lo

        self.nat_drops = 0          # outbound failures: pool or capacity exhausted
        self.unsolicited_drops = 0  # inbound with no live binding
        self.peak_bindings = 0

    @property
    def live_bindings(self) -> int:
        return len(self._by_inside)

    def free_port_count(self) -> int:
        return (self.port_hi - self._next_port + 1) + len(self._freed_ports)

    def _alloc_port(self) -> int | None:
        if self._freed_ports and (self._next_port > self.port_hi
                                  or self._freed_ports[0] < self._next_port):
            return heapq.heappop(self._freed_ports)
        if self._next_port <= self.port_hi:
            port = self._next_port
            self._next_port += 1
            return port
        return None

    def _release_port(self, port: int) -> None:
        heapq.heappush(self._freed_ports, port)

    def _drop_binding(self, binding: NatBinding) -> None:
        del self._by_inside[binding.inside]
        del self._by_outside[(binding.inside.proto, binding.outside_port)]
        self._release_port(binding.outside_port)

    def _expired(self, binding: NatBinding, now: float) -> bool:
        return now - binding.last_active > self.idle_timeout_us

    def translate_outbound(self, p: Packet, now: float) -> Packet | None:
        """Rewrite src to the external address; None means a counted drop."""
        inside = p.tuple
        binding = self._by_inside.get(inside)
        if binding is not None and self._expired(binding, now):
            self._drop_binding(binding)
            binding = None
        if binding is None:
            if len(self._by_inside) >= self.capacity:
                self.nat_drops += 1
                return None
            port = self._alloc_port()
            if port is None:
                self.nat_drops += 1
                return None
            binding = NatBinding(inside, port, now)
            self._by_inside[inside] = binding
            self._by_outside[(inside.proto, port)] = binding
            self.peak_bindings = max(self.peak_bindings, len(self._by_inside))
        binding.last_active = now
        rewritten = FiveTuple(self.external_addr, inside.dst,
                              binding.outside_port, inside.dport, inside.proto)
        return p.with_tuple(rewritten)

    def translate_inbound(self, p: Packet, now: float) -> Packet | None:
        """Map a reply back to the bound inside endpoint; None means a drop."""
        t = p.tuple
        if t.dst != self.external_addr:
            self.unsolicited_drops += 1
            return None
        binding = self._by_outside.get((t.proto, t.dport))
        if binding is not None and self._expired(binding, now):
            self._drop_binding(binding)
            binding = None
        if binding is None:
            self.unsolicited_drops += 1
            return None
        binding.last_active = now
        inside = binding.inside
        rewritten = FiveTuple(t.src, inside.src, t.sport, inside.sport, t.proto)
        return p.with_tuple(rewritten)

    def expire_bindings(self, now: float) -> int:
        """Remove bindings idle past the timeout; returns how many."""
        stale = [b for b in self._by_inside.values() if self._expired(b, now)]
        for binding in stale:
            self._drop_binding(binding)
        return len(stale)
