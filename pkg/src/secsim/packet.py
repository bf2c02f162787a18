"""Packet, address, and flow primitives shared by every other module.

Conventions used across the simulator: simulated time is in microseconds,
sizes are in bytes, and all types here are immutable value objects, so they
can be shared freely (e.g. between a tap observer and the forwarding path).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

# Fixed header arithmetic. The model never serializes real packets, so the
# usual protocol constants are kept in one place for auditability.
IP_HEADER_BYTES = 20
UDP_HEADER_BYTES = 8
TCP_HEADER_BYTES = 20
ICMP_HEADER_BYTES = 8
# Outer encapsulation on the tunneled user-plane segment:
# outer IP (20) + outer UDP (8) + GTP-U (8).
TUNNEL_OVERHEAD_BYTES = 36

# Largest transport payload an IPv4 datagram can carry (65535 - 20 - 8).
MAX_PAYLOAD_BYTES = 65507


class Proto(enum.Enum):
    """Transport protocol carried in a five-tuple."""

    TCP = "tcp"
    UDP = "udp"
    ICMP = "icmp"


class TransportKind(enum.Enum):
    """How the generator drives a flow: unconditional sends vs. ack-paced."""

    UDP_OPEN_LOOP = "udp"
    TCP_CLOSED_LOOP = "tcp"


class TcpFlag(enum.Enum):
    SYN = "syn"
    SYN_ACK = "syn_ack"
    ACK = "ack"
    DATA = "data"
    DUP_ACK = "dup_ack"


@dataclass(frozen=True, slots=True, order=True)
class Address:
    """IPv4-style 32-bit host identifier, rendered dotted-quad in logs."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value <= 0xFFFFFFFF:
            raise ValueError(f"address out of 32-bit range: {self.value}")

    @classmethod
    def parse(cls, text: str) -> "Address":
        parts = text.strip().split(".")
        if len(parts) != 4:
            raise ValueError(f"not a dotted-quad address: {text!r}")
        value = 0
        for part in parts:
            if not part.isdigit():
                raise ValueError(f"bad octet {part!r} in {text!r}")
            octet = int(part)
            if octet > 255:
                raise ValueError(f"octet {octet} out of range in {text!r}")
            value = (value << 8) | octet
        return cls(value)

    def __str__(self) -> str:
        v = self.value
        return f"{v >> 24}.{(v >> 16) & 0xFF}.{(v >> 8) & 0xFF}.{v & 0xFF}"


@dataclass(frozen=True, slots=True)
class CidrBlock:
    """Address block ``base/prefix_len`` with all host bits of base zero."""

    base: Address
    prefix_len: int

    def __post_init__(self) -> None:
        if not 0 <= self.prefix_len <= 32:
            raise ValueError(f"prefix length out of range: {self.prefix_len}")
        if self.base.value & ~self._mask() & 0xFFFFFFFF:
            raise ValueError(f"base {self.base} has bits below /{self.prefix_len}")

    def _mask(self) -> int:
        if self.prefix_len == 0:
            return 0
        return (0xFFFFFFFF << (32 - self.prefix_len)) & 0xFFFFFFFF

    def contains(self, addr: Address) -> bool:
        return (addr.value & self._mask()) == self.base.value

    def complement(self) -> list["CidrBlock"]:
        """Smallest CIDR cover of every address outside this block.

        Walks the prefix path and flips one bit per level, yielding
        ``prefix_len`` sibling blocks (empty for /0).
        """
        blocks = []
        for depth in range(self.prefix_len):
            bit = 1 << (31 - depth)
            keep = (0xFFFFFFFF << (32 - depth)) & 0xFFFFFFFF if depth else 0
            sibling = (self.base.value & keep) | ((self.base.value & bit) ^ bit)
            blocks.append(CidrBlock(Address(sibling), depth + 1))
        return blocks

    @classmethod
    def parse(cls, text: str) -> "CidrBlock":
        if "/" in text:
            addr_part, _, len_part = text.partition("/")
            if not len_part.isdigit():
                raise ValueError(f"bad prefix length in {text!r}")
            return cls(Address.parse(addr_part), int(len_part))
        return cls(Address.parse(text), 32)

    def __str__(self) -> str:
        if self.prefix_len == 32:
            return str(self.base)
        return f"{self.base}/{self.prefix_len}"


@dataclass(frozen=True, slots=True)
class FiveTuple:
    """Classic flow key. ICMP entries carry zero ports."""

    src: Address
    dst: Address
    sport: int
    dport: int
    proto: Proto

    def __post_init__(self) -> None:
        for port in (self.sport, self.dport):
            if not 0 <= port <= 0xFFFF:
                raise ValueError(f"port out of range: {port}")
        if self.proto is Proto.ICMP and (self.sport or self.dport):
            raise ValueError("ICMP five-tuples must carry zero ports")

    def reversed(self) -> "FiveTuple":
        return FiveTuple(self.dst, self.src, self.dport, self.sport, self.proto)

    def __str__(self) -> str:
        return f"{self.src}:{self.sport}->{self.dst}:{self.dport}/{self.proto.value}"


@dataclass(frozen=True, slots=True)
class Packet:
    """A simulated datagram.

    ``id`` is unique per run across all physical transmissions.  ``app_seq``
    links TCP segments and their acks to application-level sequence numbers;
    it is None for UDP.  ``hop_timestamps`` grows by one entry per node
    arrival and must never decrease in time.
    """

    id: int
    tuple: FiveTuple
    kind: TransportKind
    payload_bytes: int
    created_at: float
    hop_timestamps: tuple[tuple[str, float], ...] = ()
    tunneled: bool = False
    tcp_flags: TcpFlag | None = None
    app_seq: int | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.payload_bytes <= MAX_PAYLOAD_BYTES:
            raise ValueError(f"payload out of range: {self.payload_bytes}")

    # Copy-on-write helpers constructed directly: these sit on the hot path
    # of every simulated hop, where dataclasses.replace is measurably slow.
    def _copy(self, tuple_: FiveTuple, hops: tuple, tunneled: bool) -> "Packet":
        return Packet(self.id, tuple_, self.kind, self.payload_bytes,
                      self.created_at, hops, tunneled, self.tcp_flags,
                      self.app_seq)

    def with_hop(self, node_id: str, time_us: float) -> "Packet":
        if self.hop_timestamps and time_us < self.hop_timestamps[-1][1]:
            raise ValueError(
                f"hop time went backwards at {node_id}: "
                f"{time_us} < {self.hop_timestamps[-1][1]}"
            )
        return self._copy(self.tuple, self.hop_timestamps + ((node_id, time_us),),
                          self.tunneled)

    def with_tuple(self, new_tuple: FiveTuple) -> "Packet":
        return self._copy(new_tuple, self.hop_timestamps, self.tunneled)

    def with_tunneled(self, tunneled: bool) -> "Packet":
        return self._copy(self.tuple, self.hop_timestamps, tunneled)


def wire_size(p: Packet) -> int:
    """Bytes on the wire: payload plus headers, plus tunnel overhead if set."""
    if p.tuple.proto is Proto.TCP:
        size = p.payload_bytes + IP_HEADER_BYTES + TCP_HEADER_BYTES
    elif p.tuple.proto is Proto.UDP:
        size = p.payload_bytes + IP_HEADER_BYTES + UDP_HEADER_BYTES
    else:
        size = p.payload_bytes + IP_HEADER_BYTES + ICMP_HEADER_BYTES
    if p.tunneled:
        size += TUNNEL_OVERHEAD_BYTES
    return size


def cidr_contains(block: CidrBlock, addr: Address) -> bool:
    """True iff the top ``prefix_len`` bits of ``addr`` equal those of base."""
    return block.contains(addr)
