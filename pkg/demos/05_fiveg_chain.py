"""The tunneled user-plane chain: UE - gNB - UPF(+security, NAT) - server.

The access segment carries 36 bytes of encapsulation overhead per packet and
the user-plane node pays one extra (de|en)capsulation CPU step, so the same
security function saturates earlier than in the plain chain.  Throughput
climbs linearly with offered load and then flattens at the service capacity.

Run:  python3 demos/05_fiveg_chain.py
"""

from secsim import (ExperimentConfig, default_ruleset, link_capacity_pps,
                    run_experiment, service_capacity_pps, summarize, wire_size)
from secsim.packet import (Address, FiveTuple, Packet, Proto, TransportKind)

n_rules = len(default_ruleset())
plain = ExperimentConfig(scenario="scenario2_ips").validate()
fiveg = ExperimentConfig(scenario="fiveg_ips").validate()
print(f"inline capacity, plain chain:    {service_capacity_pps(plain, n_rules):.0f} pps")
print(f"inline capacity, tunneled chain: {service_capacity_pps(fiveg, n_rules):.0f} pps")

pkt = Packet(id=0,
             tuple=FiveTuple(Address.parse("10.45.0.2"), Address.parse("10.10.1.10"),
                             40000, 8999, Proto.UDP),
             kind=TransportKind.UDP_OPEN_LOOP, payload_bytes=512, created_at=0.0,
             tunneled=True)
print(f"512-byte UDP payload on the access segment: {wire_size(pkt)} wire bytes "
      f"({wire_size(pkt.with_tunneled(False))} after decapsulation)")
print(f"access-link ceiling: {link_capacity_pps(fiveg, wire_size(pkt)):.0f} pps\n")

cap = service_capacity_pps(fiveg, n_rules)
print(f"{'offer':>8} {'mode':>4} {'thr Mbps':>9} {'latency us':>11} {'drop %':>7}")
for factor in (0.3, 0.8, 1.3, 2.0):
    for scenario in ("fiveg_ids", "fiveg_ips"):
        cfg = ExperimentConfig(scenario=scenario, transport="udp",
                               rate_pps=factor * cap, duration_s=0.1,
                               reps=5, seed=9).validate()
        s = summarize(run_experiment(cfg))
        print(f"{factor:>7.1f}x {scenario[6:]:>4} {s.throughput_bps / 1e6:>9.2f} "
              f"{s.latency_us:>11.1f} {s.drop_pct:>7.3f}")
    print()
