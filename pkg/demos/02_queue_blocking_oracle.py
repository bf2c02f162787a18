"""Analytic cross-check of the inline inspection queue.

With transparent links, zero NAT cost and an empty ruleset, the inline queue
is a textbook K-slot single-server loss system, so its overflow probability
has a closed form.  This demo compares simulated loss against it across
utilizations -- the same check `secsim validate-oracle` runs.

Run:  python3 demos/02_queue_blocking_oracle.py
"""

from secsim.bench import mm1k_loss, validate_oracle

CAPACITY = 10
RHOS = [0.3, 0.5, 0.7, 0.9, 1.0, 1.1, 1.2, 1.5]

print(f"K = {CAPACITY} slots, exponential service, Poisson offered load\n")
print(f"{'rho':>5} {'simulated':>11} {'analytic':>11} {'|delta|':>9}")
rows = validate_oracle(RHOS, capacity=CAPACITY, offered_per_rep=3000, reps=10)
for row in rows:
    print(f"{row.rho:>5.2f} {row.simulated_loss:>11.6f} "
          f"{row.analytic_loss:>11.6f} {row.abs_error:>9.6f}")

print("\nBlocking at rho = 1 tends to 1/(K+1):",
      f"{mm1k_loss(1.0, CAPACITY):.6f} = 1/{CAPACITY + 1}")
