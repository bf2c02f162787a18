"""Per-run metrics and cross-repetition confidence intervals.

Latency is one-way simulated delay, which is well-defined here because the
simulator has a single global clock.  Jitter follows the receive-side
convention of mean absolute difference between consecutive one-way delays.
Throughput counts application payload bits at the receiver; a wire-level
variant is exported alongside for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean, stdev

from scipy import stats as _stats

from .packet import (IP_HEADER_BYTES, TCP_HEADER_BYTES, TransportKind,
                     UDP_HEADER_BYTES)
from .trace import RawTrace


class UndefinedMetricError(ValueError):
    """The trace has too little data for this metric (e.g. nothing delivered)."""


def _delivered_in_window(trace: RawTrace) -> int:
    # The drain window after the send horizon settles drop accounting only;
    # counting its deliveries here would report rates above capacity.
    window_us = trace.duration_s * 1e6
    return sum(1 for r in trace.records
               if r.delivered_at is not None and r.delivered_at <= window_us)


def throughput_bps(trace: RawTrace) -> float:
    """Receiver-side payload bits per second over the send window."""
    if trace.duration_s <= 0:
        raise UndefinedMetricError("duration must be > 0")
    return _delivered_in_window(trace) * trace.payload_bytes * 8 / trace.duration_s


def wire_throughput_bps(trace: RawTrace) -> float:
    """Like :func:`throughput_bps` but counting receiver-side wire bits."""
    if trace.duration_s <= 0:
        raise UndefinedMetricError("duration must be > 0")
    overhead = IP_HEADER_BYTES + (TCP_HEADER_BYTES
                                  if trace.transport is TransportKind.TCP_CLOSED_LOOP
                                  else UDP_HEADER_BYTES)
    return _delivered_in_window(trace) * (trace.payload_bytes + overhead) * 8 / trace.duration_s


def latency_us(trace: RawTrace) -> float:
    """Mean one-way delay over delivered packets only."""
    delays = [r.delivered_at - r.sent_at for r in trace.records
              if r.delivered_at is not None]
    if not delays:
        raise UndefinedMetricError("no delivered packets")
    return fmean(delays)


def jitter_us(trace: RawTrace) -> float:
    """Mean |delay_i - delay_{i-1}| over consecutive deliveries in receive order."""
    delivered = sorted((r for r in trace.records if r.delivered_at is not None),
                       key=lambda r: r.delivered_at)
    if len(delivered) < 2:
        raise UndefinedMetricError("need at least two delivered packets")
    delays = [r.delivered_at - r.sent_at for r in delivered]
    return fmean(abs(b - a) for a, b in zip(delays, delays[1:]))


def drop_pct(trace: RawTrace) -> float:
    """Percent of sent packets not delivered by the end of the drain window."""
    sent = len(trace.records)
    if sent == 0:
        raise UndefinedMetricError("nothing sent")
    delivered = sum(1 for r in trace.records if r.delivered_at is not None)
    return 100.0 * (sent - delivered) / sent


def confidence_interval(samples: list[float], level: float = 0.95,
                        use_t: bool = True) -> tuple[float, float]:
    """(mean, half-width) of the two-sided interval at ``level``.

    Uses the Student-t quantile by default, which is the right call for the
    small repetition counts used here; ``use_t=False`` switches to the
    normal quantile for cross-checking.
    """
    n = len(samples)
    if n < 2:
        raise UndefinedMetricError("need at least two samples")
    mean = fmean(samples)
    s = stdev(samples)
    q = 0.5 + level / 2.0
    quantile = float(_stats.t.ppf(q, n - 1) if use_t else _stats.norm.ppf(q))
    return mean, quantile * s / n ** 0.5


@dataclass(frozen=True)
class MetricsSummary:
    """Across-repetition means with 95% half-widths; None when undefined."""

    n: int
    throughput_bps: float | None
    throughput_hw: float | None
    latency_us: float | None
    latency_hw: float | None
    jitter_us: float | None
    jitter_hw: float | None
    drop_pct: float | None
    drop_hw: float | None


def _aggregate(values: list[float], level: float) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    if len(values) == 1:
        return values[0], None
    return confidence_interval(values, level)


def summarize(traces: list[RawTrace], level: float = 0.95) -> MetricsSummary:
    """Aggregate per-repetition metrics, skipping undefined repetitions."""
    thr, lat, jit, drp = [], [], [], []
    for trace in traces:
        thr.append(throughput_bps(trace))
        try:
            lat.append(latency_us(trace))
        except UndefinedMetricError:
            pass
        try:
            jit.append(jitter_us(trace))
        except UndefinedMetricError:
            pass
        try:
            drp.append(drop_pct(trace))
        except UndefinedMetricError:
            pass
    thr_m, thr_h = _aggregate(thr, level)
    lat_m, lat_h = _aggregate(lat, level)
    jit_m, jit_h = _aggregate(jit, level)
    drp_m, drp_h = _aggregate(drp, level)
    return MetricsSummary(n=len(traces),
                          throughput_bps=thr_m, throughput_hw=thr_h,
                          latency_us=lat_m, latency_hw=lat_h,
                          jitter_us=jit_m, jitter_hw=jit_h,
                          drop_pct=drp_m, drop_hw=drp_h)
