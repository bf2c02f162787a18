import pytest

from secsim.config import ExperimentConfig
from secsim.engine import (CHAIN_PRESETS, Link, PlacementProfile,
                           SchedulingError, Simulator, TcpState, build_world,
                           link_capacity_pps, service_capacity_pps,
                           tcp_on_ack, tcp_on_loss, uplink_cpu_cost_us)
from secsim.rules import default_ruleset
from secsim.seeding import STREAM_ARRIVALS, mix64
from secsim.traffic import poisson_arrivals, run_experiment
from random import Random


def run_one(cfg, ruleset=None, trace_events=False):
    cfg = cfg.validate()
    rng = Random(mix64(cfg.seed, STREAM_ARRIVALS))
    arrivals = poisson_arrivals(cfg.rate_pps, cfg.duration_s, rng)
    world = build_world(cfg, cfg.seed, arrivals, ruleset=ruleset,
                        trace_events=trace_events)
    return world, world.run()


class TestSimulator:
    def test_equal_time_ties_break_by_seq(self):
        sim = Simulator()
        order = []
        sim.schedule(5.0, "timer", lambda: order.append("first"))
        sim.schedule(5.0, "timer", lambda: order.append("second"))
        sim.run_until(10.0)
        assert order == ["first", "second"]

    def test_empty_queue_processes_zero_events(self):
        sim = Simulator()
        assert sim.run_until(100.0) == 0
        assert sim.now == 100.0

    def test_scheduling_into_the_past_is_a_fault(self):
        sim = Simulator()
        sim.schedule(5.0, "timer", lambda: None)
        sim.run_until(10.0)
        with pytest.raises(SchedulingError):
            sim.schedule(9.0, "timer", lambda: None)

    def test_run_until_backwards_is_a_fault(self):
        sim = Simulator()
        sim.run_until(10.0)
        with pytest.raises(SchedulingError):
            sim.run_until(5.0)

    def test_events_at_horizon_execute(self):
        sim = Simulator()
        hits = []
        sim.schedule(10.0, "timer", lambda: hits.append(1))
        assert sim.run_until(10.0) == 1

    def test_trace_hash_identical_for_identical_runs(self):
        hashes = []
        for _ in range(2):
            cfg = ExperimentConfig(rate_pps=5000, duration_s=0.05, reps=1, seed=9)
            world, _ = run_one(cfg, trace_events=True)
            hashes.append(world.sim.trace_hash())
        assert hashes[0] == hashes[1]
        assert hashes[0] is not None

    def test_trace_hash_differs_across_seeds(self):
        worlds = []
        for seed in (1, 2):
            cfg = ExperimentConfig(rate_pps=5000, duration_s=0.05, reps=1, seed=seed)
            world, _ = run_one(cfg, trace_events=True)
            worlds.append(world.sim.trace_hash())
        assert worlds[0] != worlds[1]


class TestLinkTransmit:
    def test_idle_link_arrival_time(self):
        # 540 wire bytes at 1 Gbps serialize in 4.32 us; plus 100 us
        # propagation per link and 5 us NAT, deterministic for one packet.
        cfg = ExperimentConfig(scenario="scenario1_ids", rate_pps=1000,
                               duration_s=0.001, reps=1, seed=1,
                               link_prop_delay_us=100.0).validate()
        world = build_world(cfg, cfg.seed, arrivals_us=[100.0])
        trace = world.run()
        assert world.links[0].serialization_us(540) == pytest.approx(4.32)
        rec = trace.records[0]
        assert rec.sent_at == 100.0
        assert rec.delivered_at == pytest.approx(100.0 + 2 * (4.32 + 100.0) + 5.0)

    def test_zero_bandwidth_rejected(self):
        with pytest.raises(ValueError):
            Link("l", 0.0, 10.0)

    def test_busy_link_shifts_later_transmissions(self):
        # Two back-to-back sends: the second serializes only after the first.
        cfg = ExperimentConfig(scenario="scenario1_ids", mode="none",
                               link_prop_delay_us=100.0).validate()
        world = build_world(cfg, seed=1, arrivals_us=[0.0, 1.0])
        trace = world.run()
        ser = world.links[0].serialization_us(540)
        first, second = trace.records
        assert first.delivered_at == pytest.approx(2 * (ser + 100.0) + 5.0)
        # second send at t=1 waits for the link (starts at ser) and then for
        # the VNF CPU still finishing packet one
        arr_vnf = 2 * ser + 100.0
        cpu_free = (ser + 100.0) + 5.0
        assert second.delivered_at == pytest.approx(
            max(arr_vnf, cpu_free) + 5.0 + ser + 100.0)

    def test_negative_prop_delay_rejected(self):
        with pytest.raises(ValueError):
            Link("l", 1e9, -1.0)

    def test_bounded_link_buffer_drops_and_conserves(self):
        # Offered rate far above the first link's drain rate with a 2-slot
        # buffer: link drops occur and the packet identity still balances.
        cfg = ExperimentConfig(scenario="scenario1_ids", rate_pps=400000,
                               duration_s=0.02, reps=1, seed=13,
                               link_bandwidth_bps=2e7,  # 540B -> 216 us each
                               link_buffer_packets=2).validate()
        _, trace = run_one(cfg)
        assert trace.counters["link_drops"] > 0
        assert conservation_ok(trace)


class TestNodeProcessing:
    def test_tap_chain_has_zero_security_delay(self):
        # IDS attached vs no security at all: identical per-packet timing.
        base = ExperimentConfig(scenario="scenario1_ids", rate_pps=20000,
                                duration_s=0.05, reps=1, seed=5)
        _, with_ids = run_one(base)
        _, without = run_one(base.with_overrides(mode="none"))
        ids_times = [(r.sent_at, r.delivered_at) for r in with_ids.records]
        bare_times = [(r.sent_at, r.delivered_at) for r in without.records]
        assert ids_times == bare_times

    def test_inline_chain_enqueues_before_nat(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", rate_pps=2000,
                               duration_s=0.05, reps=1, seed=5)
        world, trace = run_one(cfg)
        assert trace.counters["iq_enqueued"] > 0
        assert trace.counters["iq_enqueued"] == trace.counters["iq_serviced"]
        assert world.nat.peak_bindings == 1

    def test_inline_single_packet_latency_decomposes_exactly(self):
        # Deterministic service: links + inspection (+ per-rule cost) + NAT.
        cfg = ExperimentConfig(scenario="scenario2_ips", rate_pps=100,
                               duration_s=0.01, reps=1, seed=5,
                               service_dist="det",
                               link_prop_delay_us=100.0).validate()
        world = build_world(cfg, cfg.seed, arrivals_us=[50.0])
        trace = world.run()
        ser = world.links[0].serialization_us(540)
        n_rules = len(default_ruleset())
        expected = 2 * (ser + 100.0) + 8.0 + n_rules * 0.2 + 5.0
        rec = trace.records[0]
        assert rec.delivered_at - rec.sent_at == pytest.approx(expected, rel=1e-12)

    def test_vm_placement_scales_every_cpu_stage(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", rate_pps=100,
                               duration_s=0.01, reps=1, seed=5,
                               service_dist="det", placement="vm",
                               link_prop_delay_us=100.0).validate()
        world = build_world(cfg, cfg.seed, arrivals_us=[50.0])
        trace = world.run()
        ser = world.links[0].serialization_us(540)
        n_rules = len(default_ruleset())
        expected = 2 * (ser + 100.0) + 1.5 * (8.0 + n_rules * 0.2 + 5.0)
        rec = trace.records[0]
        assert rec.delivered_at - rec.sent_at == pytest.approx(expected, rel=1e-12)

    def test_tap_chain_never_uses_the_inspection_queue(self):
        cfg = ExperimentConfig(scenario="scenario1_ids", rate_pps=2000,
                               duration_s=0.05, reps=1, seed=5)
        _, trace = run_one(cfg)
        assert trace.counters["iq_enqueued"] == 0

    def test_relay_nodes_add_no_service_time(self):
        # In the tunneled chain the radio node is a pure relay: end-to-end
        # latency equals links plus the user-plane node's CPU stages.
        cfg = ExperimentConfig(scenario="fiveg_ids", rate_pps=100,
                               duration_s=0.05, reps=1, seed=5,
                               service_dist="det", link_prop_delay_us=100.0)
        world, trace = run_one(cfg)
        rec = trace.records[0]
        delay = rec.delivered_at - rec.sent_at
        # 3 links x (prop + serialization) + (tunnel + nat) cpu
        wire_tunneled = 512 + 28 + 36
        expected = (3 * 100.0
                    + 2 * world.links[0].serialization_us(wire_tunneled)
                    + world.links[0].serialization_us(540)
                    + 2.0 + 5.0)
        assert delay == pytest.approx(expected, rel=1e-9)

    def test_uplink_cpu_cost_profiles(self):
        ids_cfg = ExperimentConfig(scenario="scenario1_ids").validate()
        ips_cfg = ExperimentConfig(scenario="scenario2_ips").validate()
        n = len(default_ruleset())
        assert uplink_cpu_cost_us(ids_cfg, n) == 5.0
        assert uplink_cpu_cost_us(ips_cfg, n) == 5.0 + 8.0 + n * 0.2
        vm = ips_cfg.with_overrides(placement="vm")
        assert uplink_cpu_cost_us(vm, n) == pytest.approx(1.5 * (13.0 + n * 0.2))

    def test_capacity_helpers(self):
        cfg = ExperimentConfig(scenario="scenario2_ips").validate()
        assert service_capacity_pps(cfg, 0) == pytest.approx(1e6 / 13.0)
        assert link_capacity_pps(cfg, 540) == pytest.approx(1e9 / 4320)


class TestTcpState:
    def test_slow_start_increments_per_ack(self):
        state = TcpState(cwnd=4, ssthresh=64)
        tcp_on_ack(state, 1)
        assert state.cwnd == 5

    def test_congestion_avoidance_one_window_adds_one(self):
        state = TcpState(cwnd=64, ssthresh=64)
        for _ in range(64):
            tcp_on_ack(state, 1)
        assert state.cwnd == 65

    def test_rto_collapses_window(self):
        state = TcpState(cwnd=10, ssthresh=64)
        tcp_on_loss(state, "rto")
        assert state.ssthresh == 5
        assert state.cwnd == 1

    def test_fast_retransmit_halves_to_ssthresh(self):
        state = TcpState(cwnd=10, ssthresh=64)
        tcp_on_loss(state, "fast_retransmit")
        assert state.ssthresh == 5
        assert state.cwnd == 5

    def test_ssthresh_floor_is_two(self):
        state = TcpState(cwnd=2, ssthresh=64)
        tcp_on_loss(state, "rto")
        assert state.ssthresh == 2

    def test_rto_floor_is_one_millisecond(self):
        state = TcpState()
        assert state.rto_us == 10000.0  # conservative until a sample exists
        state.observe_rtt(100.0)
        assert state.rto_us == 1000.0
        state.srtt_us = 2000.0
        assert state.rto_us == 4000.0

    def test_srtt_exponential_smoothing(self):
        state = TcpState()
        state.observe_rtt(800.0)
        assert state.srtt_us == 800.0
        state.observe_rtt(1600.0)
        assert state.srtt_us == pytest.approx(0.875 * 800.0 + 0.125 * 1600.0)


def conservation_ok(trace):
    c = trace.counters
    return c["sent"] == (c["delivered"] + c["link_drops"] + c["overflow_drops"]
                         + c["nat_drops"] + c["ips_rule_drops"]
                         + c["in_flight_at_end"])


class TestConservationAndReliability:
    def test_udp_overload_conserves_packets(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", rate_pps=150000,
                               duration_s=0.05, reps=1, seed=3,
                               queue_capacity=10, drain_window_s=0.01)
        _, trace = run_one(cfg)
        assert trace.counters["overflow_drops"] > 0
        assert conservation_ok(trace)

    def test_udp_truncated_run_keeps_identity(self):
        # Tiny drain leaves packets in flight; identity must still hold.
        cfg = ExperimentConfig(scenario="fiveg_ips", rate_pps=100000,
                               duration_s=0.02, reps=1, seed=3,
                               queue_capacity=1024, drain_window_s=0.0001)
        _, trace = run_one(cfg)
        assert trace.counters["in_flight_at_end"] > 0
        assert conservation_ok(trace)

    def test_tcp_conserves_packets(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                               rate_pps=30000, duration_s=0.1, reps=1, seed=3,
                               queue_capacity=32)
        _, trace = run_one(cfg)
        assert conservation_ok(trace)

    def test_tcp_delivers_every_transmitted_segment_exactly_once(self):
        # Force loss with a small queue; retransmission must recover all of it.
        cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                               rate_pps=50000, duration_s=0.1, reps=1, seed=3,
                               queue_capacity=16)
        world, trace = run_one(cfg)
        undelivered = [r for r in trace.records if r.delivered_at is None]
        assert undelivered == []
        # receiver-side uniqueness: recv_next advanced once per segment
        assert world._recv_next == len(trace.records)

    def test_tcp_in_flight_tracked_if_horizon_cuts_off(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                               rate_pps=50000, duration_s=0.02, reps=1, seed=3,
                               queue_capacity=16, drain_window_s=0.0)
        _, trace = run_one(cfg)
        assert conservation_ok(trace)

    def test_tcp_clean_run_sends_no_spurious_retransmissions(self):
        # RTT well above the post-sample RTO floor: a stale handshake timer
        # or an undersized initial RTO would both show up as extra physical
        # packets here.  A clean run is exactly SYN + SYN-ACK + handshake-ACK
        # plus one data and one ack per segment.
        cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                               rate_pps=2000, duration_s=0.05, reps=1, seed=5,
                               link_prop_delay_us=400.0)
        world, trace = run_one(cfg)
        n = len(trace.records)
        assert n > 0
        assert trace.counters["sent"] == 3 + 2 * n
        assert trace.counters["delivered"] == trace.counters["sent"]
        assert world._recv_next == n


class TestDeterminism:
    def test_identical_config_and_seed_bit_identical_metrics(self):
        cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                               rate_pps=20000, duration_s=0.05, reps=2, seed=77)
        a = run_experiment(cfg)
        b = run_experiment(cfg)
        for ta, tb in zip(a, b):
            assert ta.counters == tb.counters
            assert [(r.sent_at, r.delivered_at) for r in ta.records] == \
                   [(r.sent_at, r.delivered_at) for r in tb.records]

    def test_placement_profile_multipliers(self):
        prof = PlacementProfile()
        assert prof.multiplier("vm") == 1.5
        assert prof.multiplier("container") == 1.0
        with pytest.raises(ValueError):
            prof.multiplier("bare-metal")

    def test_presets_exposed_by_name(self):
        assert set(CHAIN_PRESETS) == {"scenario1_ids", "scenario2_ips",
                                      "fiveg_ids", "fiveg_ips"}

    def test_hop_timestamps_recorded_along_chain(self):
        cfg = ExperimentConfig(scenario="fiveg_ids", rate_pps=100,
                               duration_s=0.02, reps=1, seed=5)
        world, trace = run_one(cfg)
        # spot-check monotonicity enforcement was active on a delivered packet
        assert trace.counters["delivered"] > 0
