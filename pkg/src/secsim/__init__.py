"""secsim: deterministic discrete-event benchmark for softwarized security
service chains (IDS tap, inline IPS, source NAT), in plain client-VNF-server
chains and a tunneled 5G-style user-plane chain."""

from .config import ExperimentConfig, parse_config_file
from .engine import (CHAIN_PRESETS, PlacementProfile, Simulator, TcpState,
                     World, build_world, link_capacity_pps,
                     service_capacity_pps, tcp_on_ack, tcp_on_loss)
from .metrics import (MetricsSummary, UndefinedMetricError,
                      confidence_interval, drop_pct, jitter_us, latency_us,
                      summarize, throughput_bps, wire_throughput_bps)
from .nat import NatTable
from .packet import (Address, CidrBlock, FiveTuple, Packet, Proto, TcpFlag,
                     TransportKind, cidr_contains, wire_size)
from .rules import (AlertRecord, FlowState, Rule, RuleAction, RuleSet,
                    RuleVars, default_ruleset, match_packet, parse_rule,
                    parse_ruleset, serialize_rule)
from .secfn import InspectionQueue, SecMode, Verdict, ids_observe, ips_service, verdict
from .trace import RawTrace
from .traffic import poisson_arrivals, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Address", "AlertRecord", "CHAIN_PRESETS", "CidrBlock", "ExperimentConfig",
    "FiveTuple", "FlowState", "InspectionQueue", "MetricsSummary", "NatTable",
    "Packet", "PlacementProfile", "Proto", "RawTrace", "Rule", "RuleAction",
    "RuleSet", "RuleVars", "SecMode", "Simulator", "TcpFlag", "TcpState",
    "TransportKind", "UndefinedMetricError", "Verdict", "World", "build_world",
    "cidr_contains", "confidence_interval", "default_ruleset", "drop_pct",
    "ids_observe", "ips_service", "jitter_us", "latency_us",
    "link_capacity_pps", "match_packet", "parse_config_file", "parse_rule",
    "parse_ruleset", "poisson_arrivals", "run_experiment",
    "serialize_rule", "service_capacity_pps", "summarize", "tcp_on_ack",
    "tcp_on_loss", "throughput_bps", "verdict", "wire_size",
    "wire_throughput_bps",
]
