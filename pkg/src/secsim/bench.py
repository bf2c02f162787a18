"""Benchmark orchestration: runs, sweeps, QoS gating, CSV export, oracle.

The CSV schema is flat and fixed so one file can feed every figure:

    scenario,mode,placement,transport,rate_pps,rep,throughput_bps,latency_us,
    jitter_us,drop_pct,overflow_drops,nat_drops,seed,
    throughput_hw,latency_hw,jitter_hw,drop_hw

Per-repetition rows leave the half-width columns empty; the summary row uses
``rep = mean`` and fills them.  All floats use fixed 6-decimal formatting so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import ExperimentConfig
from .metrics import MetricsSummary, UndefinedMetricError, summarize
from .metrics import drop_pct as _drop_pct
from .metrics import jitter_us as _jitter_us
from .metrics import latency_us as _latency_us
from .metrics import throughput_bps as _throughput_bps
from .rules import RuleSet, format_alert_line
from .trace import RawTrace
from .traffic import run_experiment

CSV_COLUMNS = ("scenario", "mode", "placement", "transport", "rate_pps", "rep",
               "throughput_bps", "latency_us", "jitter_us", "drop_pct",
               "overflow_drops", "nat_drops", "seed",
               "throughput_hw", "latency_hw", "jitter_hw", "drop_hw")
CSV_HEADER = ",".join(CSV_COLUMNS)


# ---------------------------------------------------------------------------
# QoS gate

@dataclass(frozen=True)
class QosProfile:
    """Application QoS requirements: latency bound, rate floor, reliability floor."""

    name: str
    max_latency_ms: float
    min_rate_bps: float
    min_reliability_pct: float
    payload_class: str


# Built-in application profiles.  Ranged rate requirements keep their floor
# (the weakest rate that still satisfies the application class).
QOS_PROFILES = {
    p.name: p for p in (
        QosProfile("discrete-automation", 10.0, 10e6, 99.99, "small to high"),
        QosProfile("process-automation-remote", 60.0, 1e6, 99.999, "small to high"),
        QosProfile("process-automation-monitoring", 60.0, 1e6, 99.9, "small"),
        QosProfile("electricity-distribution-medium", 40.0, 10e6, 99.9, "small to high"),
        QosProfile("electricity-distribution-high", 5.0, 10e6, 99.999, "small"),
        QosProfile("its-infrastructure-backhaul", 30.0, 10e6, 99.9999, "small to high"),
    )
}


@dataclass(frozen=True)
class QosCheck:
    profile: QosProfile
    latency_ok: bool
    rate_ok: bool
    reliability_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.latency_ok and self.rate_ok and self.reliability_ok


def qos_check(latency_us: float | None, throughput_bps: float | None,
              drop_pct: float | None, profile: QosProfile) -> QosCheck:
    """Gate measured metrics against a profile; each criterion separately."""
    if latency_us is None or throughput_bps is None or drop_pct is None:
        raise UndefinedMetricError("cannot gate undefined metrics")
    return QosCheck(
        profile=profile,
        latency_ok=latency_us / 1000.0 <= profile.max_latency_ms,
        rate_ok=throughput_bps >= profile.min_rate_bps,
        reliability_ok=(100.0 - drop_pct) >= profile.min_reliability_pct,
    )


def qos_check_summary(summary: MetricsSummary, profile: QosProfile) -> QosCheck:
    return qos_check(summary.latency_us, summary.throughput_bps,
                     summary.drop_pct, profile)


# ---------------------------------------------------------------------------
# CSV export

def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def _metric_or_none(fn, trace: RawTrace) -> float | None:
    try:
        return fn(trace)
    except UndefinedMetricError:
        return None


def csv_rows(cfg: ExperimentConfig, traces: list[RawTrace],
             summary: MetricsSummary | None = None) -> list[str]:
    """Per-repetition rows followed by one summary row."""
    if summary is None:
        summary = summarize(traces)
    rows = []
    for rep, trace in enumerate(traces):
        rows.append(",".join((
            cfg.scenario, cfg.effective_mode, cfg.placement, cfg.transport,
            _fmt(cfg.rate_pps), str(rep),
            _fmt(_metric_or_none(_throughput_bps, trace)),
            _fmt(_metric_or_none(_latency_us, trace)),
            _fmt(_metric_or_none(_jitter_us, trace)),
            _fmt(_metric_or_none(_drop_pct, trace)),
            str(trace.counters.get("overflow_drops", 0)),
            str(trace.counters.get("nat_drops", 0)),
            str(trace.seed), "", "", "", "",
        )))
    rows.append(summary_row(cfg, traces, summary))
    return rows


def summary_row(cfg: ExperimentConfig, traces: list[RawTrace],
                summary: MetricsSummary) -> str:
    overflow = sum(t.counters.get("overflow_drops", 0) for t in traces)
    nat = sum(t.counters.get("nat_drops", 0) for t in traces)
    return ",".join((
        cfg.scenario, cfg.effective_mode, cfg.placement, cfg.transport,
        _fmt(cfg.rate_pps), "mean",
        _fmt(summary.throughput_bps), _fmt(summary.latency_us),
        _fmt(summary.jitter_us), _fmt(summary.drop_pct),
        str(overflow), str(nat), str(cfg.seed),
        _fmt(summary.throughput_hw), _fmt(summary.latency_hw),
        _fmt(summary.jitter_hw), _fmt(summary.drop_hw),
    ))


def write_csv(path: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(CSV_HEADER + "\n")
        for row in rows:
            handle.write(row + "\n")


def write_alert_log(path: str, traces: list[RawTrace]) -> None:
    """Alert lines for all repetitions, in repetition order."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for trace in traces:
            for alert in trace.alerts:
                handle.write(format_alert_line(alert) + "\n")


# ---------------------------------------------------------------------------
# Commands (CLI-facing, but fully usable as library calls)

def cmd_run(cfg: ExperimentConfig, out_csv: str | None = None,
            alert_log: str | None = None,
            ruleset: RuleSet | None = None) -> tuple[MetricsSummary, list[RawTrace]]:
    """Run an experiment; optionally write the CSV and the alert log."""
    traces = run_experiment(cfg, ruleset=ruleset)
    summary = summarize(traces)
    if out_csv is not None:
        write_csv(out_csv, csv_rows(cfg, traces, summary))
    if alert_log is not None:
        write_alert_log(alert_log, traces)
    return summary, traces


def cmd_sweep(cfg: ExperimentConfig, rates: list[float],
              modes: list[str] | None = None,
              out_csv: str | None = None) -> list[str]:
    """One summary row per (rate, mode); rows ordered by rate then mode."""
    if not rates:
        raise ValueError("sweep needs a non-empty rate list")
    sweep_modes = modes if modes else [cfg.effective_mode]
    rows = []
    for rate in rates:
        for mode in sweep_modes:
            point = cfg.with_overrides(rate_pps=rate, mode=mode).validate()
            traces = run_experiment(point)
            rows.append(summary_row(point, traces, summarize(traces)))
    if out_csv is not None:
        write_csv(out_csv, rows)
    return rows


# ---------------------------------------------------------------------------
# Queueing oracle

def mm1k_loss(rho: float, capacity: int) -> float:
    """Blocking probability of the K-slot single-server Markov queue."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    if rho == 1.0:
        return 1.0 / (capacity + 1)
    return (1.0 - rho) * rho ** capacity / (1.0 - rho ** (capacity + 1))


@dataclass(frozen=True)
class OracleRow:
    rho: float
    simulated_loss: float
    analytic_loss: float

    @property
    def abs_error(self) -> float:
        return abs(self.simulated_loss - self.analytic_loss)


def validate_oracle(rhos: list[float], capacity: int = 10,
                    offered_per_rep: int = 6000, reps: int = 20,
                    base_seed: int = 7,
                    service_mean_us: float = 8.0) -> list[OracleRow]:
    """Compare simulated inline-queue overflow loss against the closed form.

    The run isolates the inspection queue: links are made transparent, NAT
    and rule-matching costs are zeroed, and the ruleset is empty, so the
    queue sees exact Poisson arrivals and exponential service.
    """
    rows = []
    empty = RuleSet([])
    for rho in rhos:
        rate = rho * 1e6 / service_mean_us
        cfg = ExperimentConfig(
            scenario="scenario2_ips", transport="udp", rate_pps=rate,
            duration_s=offered_per_rep / rate, reps=reps, seed=base_seed,
            queue_capacity=capacity, ips_cost_us=service_mean_us,
            nat_cost_us=0.0, rule_match_cost_us=0.0,
            link_bandwidth_bps=1e15, link_prop_delay_us=0.0,
            drain_window_s=0.05,
        ).validate()
        traces = run_experiment(cfg, ruleset=empty)
        offered = sum(t.counters["sent"] for t in traces)
        dropped = sum(t.counters["overflow_drops"] for t in traces)
        simulated = dropped / offered if offered else math.nan
        rows.append(OracleRow(rho, simulated, mm1k_loss(rho, capacity)))
    return rows
