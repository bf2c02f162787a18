"""Open-loop UDP versus closed-loop TCP through the inline chain.

Both transports are driven by the same Poisson offer process (identical
instants at identical seeds), which makes them directly comparable: UDP
sends unconditionally and eats losses; TCP paces with a congestion window,
retransmits, and never loses application data -- it pays for that in
throughput, because its ack stream shares the VNF CPU.

Run:  python3 demos/04_tcp_vs_udp.py
"""

from secsim import ExperimentConfig, default_ruleset, service_capacity_pps
from secsim import run_experiment, summarize
from secsim.metrics import drop_pct

cap = service_capacity_pps(ExperimentConfig(scenario="scenario2_ips").validate(),
                           len(default_ruleset()))

print(f"{'offer':>10} {'transport':>9} {'thr Mbps':>9} {'latency us':>11} "
      f"{'jitter us':>10} {'drop %':>7}")
for factor in (0.4, 0.85, 1.3):
    for transport in ("udp", "tcp"):
        cfg = ExperimentConfig(scenario="scenario2_ips", transport=transport,
                               rate_pps=factor * cap, duration_s=0.1,
                               reps=5, seed=12).validate()
        traces = run_experiment(cfg)
        s = summarize(traces)
        print(f"{factor:>9.2f}x {transport:>9} {s.throughput_bps / 1e6:>9.2f} "
              f"{s.latency_us:>11.1f} {s.jitter_us:>10.2f} {s.drop_pct:>7.3f}")
    print()

cfg = ExperimentConfig(scenario="scenario2_ips", transport="tcp",
                       rate_pps=1.3 * cap, duration_s=0.1, reps=5,
                       seed=12).validate()
losses = [drop_pct(t) for t in run_experiment(cfg)]
print("TCP application-data loss per repetition at 1.3x load:", losses)
print("(retransmission recovers everything the queue drops)")
