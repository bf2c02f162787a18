"""Tour of the signature-rule engine: parse, serialize, match, verdict.

Run:  python3 demos/01_rule_engine_tour.py
"""

from secsim import (Address, CidrBlock, FiveTuple, Proto, RuleVars, SecMode,
                    default_ruleset, match_packet, serialize_rule, verdict)
from secsim.rules import DEFAULT_RULES_TEXT, FlowState, format_alert_line
from secsim.secfn import ids_observe

print("== bundled sample rules ==")
print(DEFAULT_RULES_TEXT)

ruleset = default_ruleset()
print("parsed", len(ruleset), "rules; canonical forms:")
for rule in ruleset:
    print("  ", serialize_rule(rule))

# Variable table: HOME_NET is the protected subnet, EXTERNAL_NET its complement.
variables = RuleVars.defaults(CidrBlock.parse("10.10.1.0/24"))
flow_state = FlowState()

probes = [
    ("ICMP echo into HOME_NET",
     FiveTuple(Address.parse("192.168.122.10"), Address.parse("10.10.1.10"),
               0, 0, Proto.ICMP)),
    ("TCP to HOME_NET:80",
     FiveTuple(Address.parse("192.168.122.10"), Address.parse("10.10.1.10"),
               40000, 80, Proto.TCP)),
    ("UDP to HOME_NET:53",
     FiveTuple(Address.parse("192.168.122.10"), Address.parse("10.10.1.10"),
               40000, 53, Proto.UDP)),
]

print("\n== matching ==")
for label, tuple_ in probes:
    matches = match_packet(ruleset, tuple_, variables, flow_state)
    sids = [rule.sid for rule, _ in matches]
    print(f"{label}: matches {sids or 'nothing'}; "
          f"tap verdict={verdict(matches, SecMode.IDS).value}, "
          f"inline verdict={verdict(matches, SecMode.IPS).value}")

print("\n== tap-mode alert records ==")
from secsim.packet import Packet, TransportKind

pkt = Packet(id=0, tuple=probes[0][1], kind=TransportKind.UDP_OPEN_LOOP,
             payload_bytes=64, created_at=0.0)
for alert in ids_observe(pkt, ruleset, variables, flow_state, now=123.456):
    print("  ", format_alert_line(alert))
