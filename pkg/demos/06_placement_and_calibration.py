"""Placement contrast and the low-load latency crossover, as calibration.

Part 1 compares VM against container placement: the VM multiplier stretches
every per-packet CPU cost by 1.5x, so containers deliver lower latency and
at least equal throughput at any meaningful load.

Part 2 is deliberately a calibration exercise.  Reports from real testbeds
sometimes show the inline deployment *beating* the tap deployment on latency
at low packet rates, with the ordering flipping under load.  The default
constants here do not force that crossover; whether and where it appears
depends on deployment-specific quantities this model exposes as knobs:

  * the per-packet cost of the tap deployment's forwarding path
    (``nat_cost_us`` in the tap run), and
  * the cost split and variability of the inline path (``nat_cost_us`` +
    exponential ``ips_cost_us`` in the inline run).

The calibration below gives the inline path a lower average cost but much
higher variability.  Average cost wins when the queues are idle (inline
ahead at the lowest rate), variability costs the inline path the mid band,
and capacity ordering rules near saturation.  A full reproduction of the
reported crossover would need the tap path's cost to grow with load faster
than the inline path's; this model exposes the constants but refuses to
invent that dependence -- calibrate them against your own testbed instead.

Run:  python3 demos/06_placement_and_calibration.py
"""

from secsim import (ExperimentConfig, default_ruleset, run_experiment,
                    service_capacity_pps, summarize)

n_rules = len(default_ruleset())

print("== part 1: vm vs container (inline mode, defaults) ==")
cap = service_capacity_pps(ExperimentConfig(scenario="scenario2_ips").validate(),
                           n_rules)
print(f"{'offer':>8} {'placement':>10} {'thr Mbps':>9} {'latency us':>11} {'drop %':>7}")
for factor in (0.5, 0.9, 1.4):
    for placement in ("container", "vm"):
        cfg = ExperimentConfig(scenario="scenario2_ips", placement=placement,
                               rate_pps=factor * cap, duration_s=0.1,
                               reps=5, seed=6).validate()
        s = summarize(run_experiment(cfg))
        print(f"{factor:>7.1f}x {placement:>10} {s.throughput_bps / 1e6:>9.2f} "
              f"{s.latency_us:>11.1f} {s.drop_pct:>7.3f}")
    print()

print("== part 2: one calibration that produces the low-load crossover ==")
# Tap deployment: the forwarding path costs a flat 15 us/packet.
# Inline deployment: a lean 1 us forward stage plus exponential 13 us
# analysis in the dedicated queue.  Same nominal capacity ballpark; very
# different variability.
tap = ExperimentConfig(scenario="scenario1_ids", nat_cost_us=15.0,
                       ips_cost_us=0.0, rule_match_cost_us=0.0,
                       duration_s=0.1, reps=5, seed=6)
inline = ExperimentConfig(scenario="scenario2_ips", nat_cost_us=1.0,
                          ips_cost_us=13.0, rule_match_cost_us=0.0,
                          duration_s=0.1, reps=5, seed=6)
cap_tap = service_capacity_pps(tap.validate(), 0)

print(f"{'offer':>8} {'tap lat us':>11} {'inline lat us':>13}  ordering")
for factor in (0.1, 0.3, 0.5, 0.7, 0.85, 0.95):
    rate = factor * cap_tap
    lat = {}
    for name, base in (("tap", tap), ("inline", inline)):
        s = summarize(run_experiment(base.with_overrides(rate_pps=rate).validate()))
        lat[name] = s.latency_us
    marker = "inline < tap" if lat["inline"] < lat["tap"] else "tap < inline"
    print(f"{factor:>7.2f}x {lat['tap']:>11.1f} {lat['inline']:>13.1f}  {marker}")

print("\nDefaults leave the tap ahead everywhere; under this calibration the")
print("inline path leads when idle, loses the mid band to its variability,")
print("and leads again near the tap path's saturation point.")
