import pytest
from hypothesis import given, strategies as st

from secsim.packet import (Address, CidrBlock, FiveTuple, Packet, Proto,
                           TransportKind, cidr_contains, wire_size)


def make_packet(proto=Proto.UDP, payload=512, tunneled=False,
                kind=TransportKind.UDP_OPEN_LOOP):
    sport, dport = (0, 0) if proto is Proto.ICMP else (40000, 80)
    t = FiveTuple(Address.parse("10.0.0.2"), Address.parse("10.0.0.3"),
                  sport, dport, proto)
    return Packet(id=1, tuple=t, kind=kind, payload_bytes=payload,
                  created_at=0.0, tunneled=tunneled)


class TestWireSize:
    def test_udp_512(self):
        assert wire_size(make_packet(Proto.UDP, 512)) == 540

    def test_tcp_512(self):
        assert wire_size(make_packet(Proto.TCP, 512)) == 552

    def test_udp_512_tunneled(self):
        assert wire_size(make_packet(Proto.UDP, 512, tunneled=True)) == 576

    @given(st.integers(min_value=0, max_value=65506),
           st.sampled_from([Proto.UDP, Proto.TCP, Proto.ICMP]),
           st.booleans())
    def test_monotone_in_payload(self, payload, proto, tunneled):
        small = wire_size(make_packet(proto, payload, tunneled))
        big = wire_size(make_packet(proto, payload + 1, tunneled))
        assert big == small + 1


class TestAddress:
    def test_render(self):
        assert str(Address.parse("192.168.122.10")) == "192.168.122.10"

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_round_trip(self, value):
        addr = Address(value)
        assert Address.parse(str(addr)) == addr

    @pytest.mark.parametrize("text", ["1.2.3", "1.2.3.4.5", "256.0.0.1", "a.b.c.d", ""])
    def test_rejects_garbage(self, text):
        with pytest.raises(ValueError):
            Address.parse(text)

    def test_rejects_out_of_range_value(self):
        with pytest.raises(ValueError):
            Address(2**32)


class TestCidr:
    def test_contains(self):
        block = CidrBlock.parse("10.0.0.0/8")
        assert cidr_contains(block, Address.parse("10.1.2.3"))

    def test_not_contains(self):
        block = CidrBlock.parse("10.0.0.0/8")
        assert not cidr_contains(block, Address.parse("192.168.0.1"))

    def test_zero_prefix_contains_everything(self):
        block = CidrBlock.parse("0.0.0.0/0")
        for text in ("0.0.0.0", "255.255.255.255", "10.1.2.3"):
            assert cidr_contains(block, Address.parse(text))

    def test_base_must_be_aligned(self):
        with pytest.raises(ValueError):
            CidrBlock(Address.parse("10.0.0.1"), 8)

    def test_contains_own_base(self):
        block = CidrBlock.parse("172.16.0.0/12")
        assert block.contains(block.base)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_complement_partitions_space(self, value):
        block = CidrBlock.parse("10.10.1.0/24")
        addr = Address(value)
        inside = block.contains(addr)
        covering = [b for b in block.complement() if b.contains(addr)]
        if inside:
            assert covering == []
        else:
            assert len(covering) == 1

    def test_complement_block_count(self):
        assert len(CidrBlock.parse("10.10.1.0/24").complement()) == 24
        assert CidrBlock.parse("0.0.0.0/0").complement() == []


class TestFiveTuple:
    def test_icmp_requires_zero_ports(self):
        with pytest.raises(ValueError):
            FiveTuple(Address(1), Address(2), 1, 0, Proto.ICMP)

    def test_port_range_checked(self):
        with pytest.raises(ValueError):
            FiveTuple(Address(1), Address(2), 70000, 80, Proto.TCP)

    def test_reversed(self):
        t = FiveTuple(Address(1), Address(2), 10, 20, Proto.UDP)
        assert t.reversed() == FiveTuple(Address(2), Address(1), 20, 10, Proto.UDP)


class TestPacket:
    def test_hop_timestamps_must_not_go_backwards(self):
        pkt = make_packet().with_hop("a", 10.0)
        with pytest.raises(ValueError):
            pkt.with_hop("b", 9.0)

    def test_hop_appends(self):
        pkt = make_packet().with_hop("a", 1.0).with_hop("b", 2.0)
        assert pkt.hop_timestamps == (("a", 1.0), ("b", 2.0))

    def test_payload_bounds(self):
        with pytest.raises(ValueError):
            make_packet(payload=65508)

    def test_rewrites_preserve_identity(self):
        pkt = make_packet()
        rewritten = pkt.with_tuple(pkt.tuple.reversed())
        assert rewritten.id == pkt.id
        assert rewritten.payload_bytes == pkt.payload_bytes
