"""Workload generation and experiment repetition management.

Traffic follows a Poisson process at a configured mean packet rate.  UDP is
open loop: every arrival is sent unconditionally.  TCP is closed loop: the
arrival process models the application offering segments into the send
buffer at the same mean rate, and the transport paces the wire.  Driving
both transports from the same arrival stream makes them directly comparable
at equal offered load (and at equal seeds, identical offer instants).

An experiment is ``reps`` independent repetitions of ``duration_s`` seconds;
repetition r runs with seed ``mix64(base_seed, r)`` so any single repetition
can be reproduced on its own.
"""

from __future__ import annotations

from random import Random

from .config import ExperimentConfig
from .engine import build_world
from .rules import RuleSet, parse_ruleset
from .seeding import STREAM_ARRIVALS, mix64
from .trace import RawTrace


def poisson_arrivals(rate_pps: float, duration_s: float, rng: Random) -> list[float]:
    """Strictly increasing arrival times (microseconds) below the horizon.

    Interarrivals are i.i.d. exponential with mean ``1/rate_pps``.
    """
    if rate_pps <= 0:
        raise ValueError("rate_pps must be > 0")
    horizon_us = duration_s * 1e6
    mean_gap_us = 1e6 / rate_pps
    times = []
    t = rng.expovariate(1.0) * mean_gap_us
    while t < horizon_us:
        times.append(t)
        t += rng.expovariate(1.0) * mean_gap_us
    return times


def load_ruleset(path: str) -> RuleSet:
    with open(path, encoding="utf-8") as handle:
        return parse_ruleset(handle.read())


def run_experiment(cfg: ExperimentConfig, ruleset: RuleSet | None = None,
                   trace_events: bool = False) -> list[RawTrace]:
    """Run all repetitions of an experiment; one trace per repetition."""
    cfg.validate()
    if ruleset is None and cfg.ruleset_path is not None:
        ruleset = load_ruleset(cfg.ruleset_path)
    traces = []
    for rep in range(cfg.reps):
        rep_seed = mix64(cfg.seed, rep)
        rng = Random(mix64(rep_seed, STREAM_ARRIVALS))
        arrivals = poisson_arrivals(cfg.rate_pps, cfg.duration_s, rng)
        world = build_world(cfg, rep_seed, arrivals, ruleset=ruleset,
                            trace_events=trace_events)
        traces.append(world.run())
    return traces
