"""Tap (IDS) versus inline (IPS) across offered load.

Sweeps UDP rates through the client-VNF-server chain in both security modes
and prints the summary rows.  The inline mode's bounded verdict queue shows
up as extra latency and overflow loss once the load approaches its service
capacity; the tap never touches the forwarding path, so its numbers track
the NAT-only baseline.

Run:  python3 demos/03_ids_vs_ips_sweep.py [--plot DIR]
"""

import sys

from secsim import ExperimentConfig, default_ruleset, service_capacity_pps
from secsim.bench import CSV_HEADER, cmd_sweep

cfg = ExperimentConfig(scenario="scenario1_ids", transport="udp",
                       duration_s=0.1, reps=5, seed=2).validate()
cap = service_capacity_pps(ExperimentConfig(scenario="scenario2_ips").validate(),
                           len(default_ruleset()))
rates = [round(f * cap) for f in (0.2, 0.5, 0.8, 1.0, 1.2, 1.6)]

print(f"inline service capacity ~ {cap:.0f} pps; sweeping {rates}\n")
rows = cmd_sweep(cfg, [float(r) for r in rates], modes=["ids", "ips"],
                 out_csv="sweep_ids_vs_ips.csv")
print(CSV_HEADER)
for row in rows:
    print(row)
print("\nwrote sweep_ids_vs_ips.csv")

if "--plot" in sys.argv:
    out_dir = sys.argv[sys.argv.index("--plot") + 1]
    from secsim.cli import bench_plot
    for path in bench_plot("sweep_ids_vs_ips.csv", out_dir,
                           ["throughput_bps", "latency_us", "drop_pct"]):
        print("wrote", path)
