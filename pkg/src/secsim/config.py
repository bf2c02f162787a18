"""Experiment configuration: defaults, flat key=value files, validation.

Configuration is explicit-only: a value comes from the built-in default, a
config file, or a command-line flag, in that order.  Environment variables
are deliberately ignored so a config file plus a seed fully determines a
run.  Unknown keys are rejected rather than silently dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from .packet import MAX_PAYLOAD_BYTES

SCENARIOS = ("scenario1_ids", "scenario2_ips", "fiveg_ids", "fiveg_ips")
MODES = ("ids", "ips", "none")
PLACEMENTS = ("vm", "container")
TRANSPORTS = ("udp", "tcp")
SERVICE_DISTS = ("exp", "det")

# Scenario presets already fix a security mode; an explicit ``mode`` key
# overrides it (``none`` strips the security function, leaving NAT only,
# which is the baseline for tap-neutrality checks).
_PRESET_MODE = {
    "scenario1_ids": "ids",
    "scenario2_ips": "ips",
    "fiveg_ids": "ids",
    "fiveg_ips": "ips",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "scenario1_ids"
    mode: str | None = None
    placement: str = "container"
    transport: str = "udp"
    rate_pps: float = 1000.0
    payload_bytes: int = 512
    duration_s: float = 30.0
    reps: int = 20
    seed: int = 1
    queue_capacity: int = 1024
    nat_capacity: int = 4096
    nat_idle_timeout_s: float = 30.0
    link_bandwidth_bps: float = 1e9
    link_prop_delay_us: float = 100.0
    link_buffer_packets: int | None = None
    # Calibration defaults for per-packet CPU costs (container profile,
    # microseconds).  They set relative behaviour, not absolute truth, and
    # every one is overridable.
    nat_cost_us: float = 5.0
    ips_cost_us: float = 8.0
    rule_match_cost_us: float = 0.2
    tunnel_cost_us: float = 2.0
    vm_multiplier: float = 1.5
    container_multiplier: float = 1.0
    service_dist: str = "exp"
    drain_window_s: float = 1.0
    ruleset_path: str | None = None
    dport: int = 8999
    sport: int = 40000
    ids_shared_cpu: bool = False
    out: str | None = None
    alert_log: str | None = None

    @property
    def effective_mode(self) -> str:
        return self.mode if self.mode is not None else _PRESET_MODE[self.scenario]

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.mode is not None and self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {MODES}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"unknown placement {self.placement!r}")
        if self.transport not in TRANSPORTS:
            raise ConfigError(f"unknown transport {self.transport!r}")
        if self.service_dist not in SERVICE_DISTS:
            raise ConfigError(f"unknown service_dist {self.service_dist!r}")
        if self.rate_pps <= 0:
            raise ConfigError("rate_pps must be > 0")
        if self.duration_s <= 0:
            raise ConfigError("duration_s must be > 0")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not 0 <= self.payload_bytes <= MAX_PAYLOAD_BYTES:
            raise ConfigError(f"payload_bytes must be in [0, {MAX_PAYLOAD_BYTES}]")
        if self.link_bandwidth_bps <= 0:
            raise ConfigError("link_bandwidth_bps must be > 0")
        if self.link_prop_delay_us < 0:
            raise ConfigError("link_prop_delay_us must be >= 0")
        if self.queue_capacity < 0:
            raise ConfigError("queue_capacity must be >= 0")
        if self.nat_capacity < 0:
            raise ConfigError("nat_capacity must be >= 0")
        for name in ("nat_cost_us", "ips_cost_us", "rule_match_cost_us",
                     "tunnel_cost_us", "drain_window_s"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.vm_multiplier <= 0 or self.container_multiplier <= 0:
            raise ConfigError("placement multipliers must be > 0")
        for name in ("dport", "sport"):
            if not 0 <= getattr(self, name) <= 0xFFFF:
                raise ConfigError(f"{name} out of range")
        return self

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **overrides)


def _convert(name: str, text: str):
    """Convert a config-file string to the field's type."""
    text = text.strip()
    if name in ("mode", "ruleset_path", "out", "alert_log") \
            and text.lower() in ("", "none"):
        return None
    if name == "link_buffer_packets":
        return None if text.lower() in ("", "none") else int(text)
    if name == "ids_shared_cpu":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name} must be true or false, got {text!r}")
    int_fields = {"payload_bytes", "reps", "seed", "queue_capacity", "nat_capacity",
                  "dport", "sport"}
    float_fields = {"rate_pps", "duration_s", "nat_idle_timeout_s", "link_bandwidth_bps",
                    "link_prop_delay_us", "nat_cost_us", "ips_cost_us",
                    "rule_match_cost_us", "tunnel_cost_us", "vm_multiplier",
                    "container_multiplier", "drain_window_s"}
    try:
        if name in int_fields:
            return int(text)
        if name in float_fields:
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {text!r}") from None
    return text


def parse_config_file(path: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read a flat ``key = value`` file ('#' comments, blank lines allowed)."""
    cfg = base if base is not None else ExperimentConfig()
    overrides = {}
    with open(path, encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            overrides[key] = _convert(key, value)
    try:
        return cfg.with_overrides(**overrides)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
