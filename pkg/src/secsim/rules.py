"""Signature-rule parsing and header matching.

The grammar is the header-matching subset used by the bundled sample rules:

    action proto src_addr src_port (-> | <>) dst_addr dst_port ( options )

with actions ``alert``/``drop``/``pass``, protocols ``tcp``/``udp``/``icmp``/
``ip``, addresses ``any``/``$VAR``/CIDR literals, and ports ``any``/single/
``lo:hi`` ranges.  Options are ``key:value;`` pairs limited to msg, sid, rev,
priority, classtype and flow.  No payload/content inspection.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .packet import Address, CidrBlock, FiveTuple, Proto


class RuleParseError(ValueError):
    """Syntax or semantic error in a rule, with a character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class RulesetError(ValueError):
    """Error in a rules file, reported with the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UndefinedVariableError(KeyError):
    pass


class RuleAction(enum.Enum):
    ALERT = "alert"
    DROP = "drop"
    PASS = "pass"


class Direction(enum.Enum):
    UNI = "->"
    BI = "<>"


class FlowOpt(enum.Enum):
    TO_SERVER = "to_server"
    TO_CLIENT = "to_client"
    ESTABLISHED = "established"


# Canonical member order used when serializing a flow option.
_FLOW_ORDER = (FlowOpt.TO_SERVER, FlowOpt.TO_CLIENT, FlowOpt.ESTABLISHED)

_PROTOS = {"tcp": Proto.TCP, "udp": Proto.UDP, "icmp": Proto.ICMP, "ip": None}


@dataclass(frozen=True, slots=True)
class AddressSpec:
    """``any``, a ``$VAR`` reference, or a literal CIDR block."""

    var: str | None = None
    literal: CidrBlock | None = None

    def __post_init__(self) -> None:
        if self.var is not None and self.literal is not None:
            raise ValueError("address spec cannot be both a variable and a literal")

    @classmethod
    def any(cls) -> "AddressSpec":
        return cls()

    def is_any(self) -> bool:
        return self.var is None and self.literal is None

    def matches(self, addr: Address, variables: "RuleVars") -> bool:
        if self.var is not None:
            return any(b.contains(addr) for b in variables.lookup(self.var))
        if self.literal is not None:
            return self.literal.contains(addr)
        return True

    def __str__(self) -> str:
        if self.var is not None:
            return f"${self.var}"
        if self.literal is not None:
            return str(self.literal)
        return "any"


@dataclass(frozen=True, slots=True)
class PortSpec:
    """``any``, a single port, or an inclusive ``lo:hi`` range."""

    lo: int | None = None
    hi: int | None = None

    def __post_init__(self) -> None:
        if (self.lo is None) != (self.hi is None):
            raise ValueError("half-open port spec")
        if self.lo is not None:
            if not 0 <= self.lo <= 0xFFFF or not 0 <= self.hi <= 0xFFFF:
                raise ValueError(f"port out of range: {self.lo}:{self.hi}")
            if self.lo > self.hi:
                raise ValueError(f"inverted port range {self.lo}:{self.hi}")

    @classmethod
    def any(cls) -> "PortSpec":
        return cls()

    @classmethod
    def single(cls, port: int) -> "PortSpec":
        return cls(port, port)

    def is_any(self) -> bool:
        return self.lo is None

    def matches(self, port: int) -> bool:
        return self.lo is None or self.lo <= port <= self.hi

    def __str__(self) -> str:
        if self.lo is None:
            return "any"
        if self.lo == self.hi:
            return str(self.lo)
        return f"{self.lo}:{self.hi}"


@dataclass(frozen=True, slots=True)
class RuleOptions:
    msg: str
    sid: int
    rev: int | None = None
    priority: int | None = None
    classtype: str | None = None
    flow: frozenset[FlowOpt] | None = None

    def __post_init__(self) -> None:
        if self.sid < 1:
            raise ValueError("sid must be >= 1")
        # keeps the canonical one-line serialization parseable
        if '"' in self.msg or "\n" in self.msg:
            raise ValueError("msg must not contain quotes or newlines")


@dataclass(frozen=True, slots=True)
class Rule:
    action: RuleAction
    proto: str  # "tcp" | "udp" | "icmp" | "ip"
    src: AddressSpec
    sport: PortSpec
    direction: Direction
    dst: AddressSpec
    dport: PortSpec
    options: RuleOptions

    @property
    def sid(self) -> int:
        return self.options.sid


class RuleVars:
    """Variable table mapping names to CIDR lists.

    HOME_NET and EXTERNAL_NET are always present.  The conventional default
    binds HOME_NET to the protected (server-side) subnet and EXTERNAL_NET to
    its complement.
    """

    def __init__(self, mapping: dict[str, list[CidrBlock]]):
        for required in ("HOME_NET", "EXTERNAL_NET"):
            if required not in mapping:
                raise ValueError(f"{required} must be defined")
        self._mapping = {name: list(blocks) for name, blocks in mapping.items()}

    @classmethod
    def defaults(cls, home_net: CidrBlock) -> "RuleVars":
        return cls({"HOME_NET": [home_net], "EXTERNAL_NET": home_net.complement()})

    def lookup(self, name: str) -> list[CidrBlock]:
        try:
            return self._mapping[name]
        except KeyError:
            raise UndefinedVariableError(f"undefined rule variable ${name}") from None

    def names(self) -> list[str]:
        return sorted(self._mapping)


@dataclass(frozen=True, slots=True)
class AlertRecord:
    """One emitted alert; ``time_us`` is the inspection time, not creation."""

    sid: int
    msg: str
    time_us: float
    tuple: FiveTuple
    action_taken: RuleAction


def format_alert_line(rec: AlertRecord) -> str:
    t = rec.tuple
    return (
        f"{rec.time_us:.3f}|{rec.sid}|{rec.action_taken.value}|{t.proto.value}|"
        f"{t.src}:{t.sport}->{t.dst}:{t.dport}|{rec.msg}"
    )


class RuleSet:
    """Rules kept in file order, indexed by sid."""

    def __init__(self, rules: list[Rule]):
        self.rules = list(rules)
        self.by_sid = {}
        for rule in self.rules:
            if rule.sid in self.by_sid:
                raise ValueError(f"duplicate sid {rule.sid}")
            self.by_sid[rule.sid] = rule

    def __len__(self) -> int:
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


# The sample signature set shipped with the simulator: ICMP/port-80/port-445
# alerting typical of a small custom deployment.  All actions are "alert", so
# an inline deployment forwards everything and drops come only from queue
# pressure.
DEFAULT_RULES_TEXT = """\
alert icmp any any -> any any (msg:"ADMIN-ALERT, ICMP traffic detected";sid:1000004;)
alert tcp any any -> $HOME_NET 80 (msg:"Possible HTTP DoS Attack";sid:1000002;)
alert icmp any any -> $HOME_NET 80 (msg:"Dos Attack suspected";sid:1000001;)
alert tcp $EXTERNAL_NET any -> $HOME_NET 445 (msg: "Exploit Detected!"; flow: to_server, established; classtype: attempted-admin; priority: 10; sid: 2094284; rev: 2;)
"""


class _Cursor:
    """Tiny scanner over a rule string tracking the current offset."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def token(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise RuleParseError("unexpected end of input", len(self.text))
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace() \
                and self.text[self.pos] not in "()":
            self.pos += 1
        if self.pos == start:
            raise RuleParseError(f"unexpected {self.text[start]!r}", start)
        return self.text[start:self.pos]

    def expect(self, char: str) -> None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            raise RuleParseError(f"expected {char!r}", self.pos)
        self.pos += 1


def _parse_address_spec(token: str, offset: int) -> AddressSpec:
    if token == "any":
        return AddressSpec.any()
    if token.startswith("$"):
        name = token[1:]
        if not name or not all(c.isalnum() or c == "_" for c in name):
            raise RuleParseError(f"bad variable reference {token!r}", offset)
        return AddressSpec(var=name)
    try:
        return AddressSpec(literal=CidrBlock.parse(token))
    except ValueError as exc:
        raise RuleParseError(f"bad address spec {token!r}: {exc}", offset) from None


def _parse_port_spec(token: str, offset: int) -> PortSpec:
    if token == "any":
        return PortSpec.any()

    def one(text: str) -> int:
        if not text.isdigit():
            raise RuleParseError(f"bad port {text!r}", offset)
        port = int(text)
        if port > 0xFFFF:
            raise RuleParseError(f"port out of range: {port}", offset)
        return port

    if ":" in token:
        lo_text, _, hi_text = token.partition(":")
        lo, hi = one(lo_text), one(hi_text)
        if lo > hi:
            raise RuleParseError(f"inverted port range {token!r}", offset)
        return PortSpec(lo, hi)
    return PortSpec.single(one(token))


_INT_OPTIONS = {"sid", "rev", "priority"}
_KNOWN_OPTIONS = {"msg", "sid", "rev", "priority", "classtype", "flow"}


def _parse_options(cur: _Cursor) -> RuleOptions:
    cur.expect("(")
    seen: dict[str, object] = {}
    while True:
        cur.skip_ws()
        if cur.peek() == ")":
            cur.pos += 1
            break
        if cur.pos >= len(cur.text):
            raise RuleParseError("unterminated option block", len(cur.text))
        key_start = cur.pos
        colon = cur.text.find(":", cur.pos)
        if colon < 0:
            raise RuleParseError("expected 'key:value;' option", cur.pos)
        key = cur.text[cur.pos:colon].strip()
        if key not in _KNOWN_OPTIONS:
            raise RuleParseError(f"unknown option key {key!r}", key_start)
        if key in seen:
            raise RuleParseError(f"duplicate option key {key!r}", key_start)
        cur.pos = colon + 1
        cur.skip_ws()
        if key == "msg":
            cur.expect('"')
            end = cur.text.find('"', cur.pos)
            if end < 0:
                raise RuleParseError("unterminated msg string", cur.pos)
            value: object = cur.text[cur.pos:end]
            cur.pos = end + 1
            cur.skip_ws()
            cur.expect(";")
        else:
            semi = cur.text.find(";", cur.pos)
            if semi < 0:
                raise RuleParseError(f"missing ';' after {key}", cur.pos)
            raw = cur.text[cur.pos:semi].strip()
            if key in _INT_OPTIONS:
                if not raw.isdigit():
                    raise RuleParseError(f"{key} must be a positive integer", cur.pos)
                value = int(raw)
            elif key == "flow":
                members = []
                for part in raw.split(","):
                    part = part.strip()
                    try:
                        members.append(FlowOpt(part))
                    except ValueError:
                        raise RuleParseError(f"unknown flow keyword {part!r}", cur.pos) from None
                if not members:
                    raise RuleParseError("empty flow option", cur.pos)
                value = frozenset(members)
            else:
                if not raw:
                    raise RuleParseError(f"empty {key} value", cur.pos)
                value = raw
            cur.pos = semi + 1
        seen[key] = value

    if "msg" not in seen:
        raise RuleParseError("rule has no msg option", cur.pos)
    if "sid" not in seen:
        raise RuleParseError("rule has no sid option", cur.pos)
    if seen["sid"] < 1:
        raise RuleParseError("sid must be >= 1", cur.pos)
    return RuleOptions(
        msg=seen["msg"],
        sid=seen["sid"],
        rev=seen.get("rev"),
        priority=seen.get("priority"),
        classtype=seen.get("classtype"),
        flow=seen.get("flow"),
    )


def parse_rule(text: str) -> Rule:
    """Parse one logical rule. Line continuations ``\\`` are tolerated."""
    cur = _Cursor(text.replace("\\\n", " ").replace("\\\r\n", " "))

    action_tok = cur.token()
    try:
        action = RuleAction(action_tok)
    except ValueError:
        raise RuleParseError(f"unknown action {action_tok!r}", cur.pos - len(action_tok)) from None

    proto_tok = cur.token()
    if proto_tok not in _PROTOS:
        raise RuleParseError(f"unknown protocol {proto_tok!r}", cur.pos - len(proto_tok))

    src_tok = cur.token()
    src = _parse_address_spec(src_tok, cur.pos - len(src_tok))
    sport_tok = cur.token()
    sport = _parse_port_spec(sport_tok, cur.pos - len(sport_tok))

    dir_tok = cur.token()
    if dir_tok == "->":
        direction = Direction.UNI
    elif dir_tok == "<>":
        direction = Direction.BI
    else:
        raise RuleParseError(f"expected '->' or '<>', got {dir_tok!r}", cur.pos - len(dir_tok))

    dst_tok = cur.token()
    dst = _parse_address_spec(dst_tok, cur.pos - len(dst_tok))
    dport_tok = cur.token()
    dport = _parse_port_spec(dport_tok, cur.pos - len(dport_tok))

    options = _parse_options(cur)
    if not cur.at_end():
        raise RuleParseError(f"trailing input {cur.text[cur.pos:]!r}", cur.pos)
    return Rule(action, proto_tok, src, sport, direction, dst, dport, options)


def serialize_rule(rule: Rule) -> str:
    """Canonical one-line form; ``parse_rule`` of the result is equal."""
    opts = [f'msg:"{rule.options.msg}"']
    if rule.options.flow is not None:
        members = ",".join(f.value for f in _FLOW_ORDER if f in rule.options.flow)
        opts.append(f"flow:{members}")
    if rule.options.classtype is not None:
        opts.append(f"classtype:{rule.options.classtype}")
    if rule.options.priority is not None:
        opts.append(f"priority:{rule.options.priority}")
    opts.append(f"sid:{rule.options.sid}")
    if rule.options.rev is not None:
        opts.append(f"rev:{rule.options.rev}")
    body = " ".join(
        [rule.action.value, rule.proto, str(rule.src), str(rule.sport),
         rule.direction.value, str(rule.dst), str(rule.dport)]
    )
    return f"{body} ({'; '.join(opts)};)"


def parse_ruleset(text: str, variables: RuleVars | None = None) -> RuleSet:
    """Parse a rules file: one rule per logical line, '#' comments allowed.

    Backslash continuations join physical lines.  The first syntax error is
    reported with its line number; duplicate sids name the later line.
    """
    rules: list[Rule] = []
    sid_lines: dict[int, int] = {}
    pending = ""
    pending_line = 0

    def flush(line_no: int) -> None:
        nonlocal pending
        logical = pending.strip()
        pending = ""
        if not logical:
            return
        try:
            rule = parse_rule(logical)
        except RuleParseError as exc:
            raise RulesetError(str(exc), line_no) from None
        if rule.sid in sid_lines:
            raise RulesetError(
                f"duplicate sid {rule.sid} (first defined on line {sid_lines[rule.sid]})",
                line_no,
            )
        sid_lines[rule.sid] = line_no
        rules.append(rule)

    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not pending:
            if not stripped or stripped.startswith("#"):
                continue
            pending_line = number
        if stripped.endswith("\\"):
            pending += stripped[:-1] + " "
            continue
        pending += stripped
        flush(pending_line)
    if pending.strip():
        raise RulesetError("unterminated line continuation", pending_line)

    # Variables are resolved at match time; validating references here keeps
    # undefined names from surfacing mid-run.
    if variables is not None:
        for rule in rules:
            for spec in (rule.src, rule.dst):
                if spec.var is not None:
                    variables.lookup(spec.var)
    return RuleSet(rules)


def default_ruleset() -> RuleSet:
    return parse_ruleset(DEFAULT_RULES_TEXT)


class FlowState:
    """Directionality and establishment facts per bidirectional flow.

    The initiator is whoever sent the first observed packet.  A flow counts
    as established once traffic has been seen in both directions; that is
    the natural reading for UDP and a serviceable simplification for TCP
    (true after SYN and SYN-ACK have passed the observation point).
    """

    __slots__ = ("_flows",)

    def __init__(self) -> None:
        self._flows: dict[tuple, list] = {}

    @staticmethod
    def _key(t: FiveTuple) -> tuple:
        a = (t.src.value, t.sport)
        b = (t.dst.value, t.dport)
        return (min(a, b), max(a, b), t.proto)

    def observe(self, t: FiveTuple) -> None:
        key = self._key(t)
        entry = self._flows.get(key)
        initiator = (t.src.value, t.sport)
        if entry is None:
            self._flows[key] = [initiator, False]
        elif not entry[1] and initiator != entry[0]:
            entry[1] = True

    def is_established(self, t: FiveTuple) -> bool:
        entry = self._flows.get(self._key(t))
        return entry is not None and entry[1]

    def is_to_server(self, t: FiveTuple) -> bool:
        """True when the packet travels from the flow initiator."""
        entry = self._flows.get(self._key(t))
        if entry is None:
            return True  # a packet opening a flow heads toward the responder
        return (t.src.value, t.sport) == entry[0]


def _rule_matches(rule: Rule, t: FiveTuple, variables: RuleVars,
                  flow_state: FlowState) -> bool:
    if rule.proto != "ip" and rule.proto != t.proto.value:
        return False

    # Ports are meaningless for ICMP; specs are parsed but not enforced.
    check_ports = t.proto is not Proto.ICMP

    def oriented(src_ok_spec, sport_spec, dst_ok_spec, dport_spec) -> bool:
        if not src_ok_spec.matches(t.src, variables):
            return False
        if not dst_ok_spec.matches(t.dst, variables):
            return False
        if check_ports and not sport_spec.matches(t.sport):
            return False
        if check_ports and not dport_spec.matches(t.dport):
            return False
        return True

    if rule.direction is Direction.UNI:
        header_ok = oriented(rule.src, rule.sport, rule.dst, rule.dport)
    else:
        header_ok = (oriented(rule.src, rule.sport, rule.dst, rule.dport)
                     or oriented(rule.dst, rule.dport, rule.src, rule.sport))
    if not header_ok:
        return False

    if rule.options.flow:
        if FlowOpt.ESTABLISHED in rule.options.flow and not flow_state.is_established(t):
            return False
        if FlowOpt.TO_SERVER in rule.options.flow and not flow_state.is_to_server(t):
            return False
        if FlowOpt.TO_CLIENT in rule.options.flow and flow_state.is_to_server(t):
            return False
    return True


def match_packet(ruleset: RuleSet, packet, variables: RuleVars,
                 flow_state: FlowState) -> list[tuple[Rule, RuleAction]]:
    """All matching rules, in file order. Accepts a Packet or a FiveTuple."""
    t = packet if isinstance(packet, FiveTuple) else packet.tuple
    return [(rule, rule.action) for rule in ruleset.rules
            if _rule_matches(rule, t, variables, flow_state)]
