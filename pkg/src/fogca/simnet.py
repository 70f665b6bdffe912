"""Deterministic discrete-event message network with an attachable
man-in-the-middle adversary.

Time is virtual milliseconds.  Events are processed in (time, insertion
order), so a given seed and script always replays byte-for-byte.  Links
are directed; a route is either a direct link or a chain through nodes
with the proxy role.  An adversary attached to a link sees every
traversal and may, within its granted capabilities, observe, drop,
delay, duplicate, replay, modify, or inject traffic. It holds no
keys, so sealed payloads stay opaque to it.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from . import wire
from .errors import DecodeError, NoRoute, UnknownLink, UnknownNode

TIERS = ("cloud", "regional", "community", "street", "home", "thing")
ROLES = ("authority", "child", "proxy")

CAPABILITIES = ("eavesdrop", "replay", "inject", "modify", "delay", "drop",
                "duplicate")


@dataclass(frozen=True)
class SimEvent:
    """A payload in flight from src to dst, delivered at `at` ms."""
    at: int
    src: str
    dst: str
    payload: bytes
    uid: int = field(default=0, compare=False)


@dataclass
class SimNode:
    node_id: str
    tier: str = "thing"
    role: str = "child"
    inbox: list = field(default_factory=list)

    def __post_init__(self):
        if self.tier not in TIERS:
            raise ValueError(f"unknown tier {self.tier!r}")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class LinkSpec:
    src: str
    dst: str
    base_latency_ms: int = 0
    jitter_ms: int = 0
    drop_probability: float = 0.0

    def __post_init__(self):
        if self.base_latency_ms < 0 or self.jitter_ms < 0:
            raise ValueError("latency must be non-negative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop probability must be in [0, 1]")


# ---- adversary actions ------------------------------------------------------

@dataclass(frozen=True)
class Drop:
    kind = "drop"


@dataclass(frozen=True)
class Delay:
    ms: int
    kind = "delay"


@dataclass(frozen=True)
class Duplicate:
    delay_ms: int = 0
    kind = "duplicate"


@dataclass(frozen=True)
class Replay:
    delay_ms: int
    kind = "replay"


@dataclass(frozen=True)
class Modify:
    transform: object  # callable(bytes, decoded-or-None) -> bytes
    kind = "modify"


@dataclass(frozen=True)
class Inject:
    payload: bytes
    delay_ms: int = 0
    kind = "inject"


@dataclass
class Rule:
    """When `match(event, decoded)` is true, perform `action`."""
    match: object
    action: object
    once: bool = True
    _spent: bool = False


@dataclass
class AdversaryPolicy:
    """Capability-bounded script; construction rejects any rule whose
    action exceeds the granted capabilities."""
    capabilities: frozenset
    rules: list = field(default_factory=list)

    def __post_init__(self):
        self.capabilities = frozenset(self.capabilities)
        unknown = self.capabilities - set(CAPABILITIES)
        if unknown:
            raise ValueError(f"unknown capabilities {sorted(unknown)}")
        for rule in self.rules:
            if rule.action.kind not in self.capabilities:
                raise ValueError(
                    f"rule action {rule.action.kind!r} not within capabilities")


@dataclass
class TranscriptEntry:
    at: int
    src: str
    dst: str
    action: str
    payload: bytes

    def hex_line(self) -> str:
        return self.payload.hex()

    def json_line(self) -> str:
        return json.dumps({"at": self.at, "src": self.src, "dst": self.dst,
                           "action": self.action, "payload": self.payload.hex()},
                          sort_keys=True)


class _Adversary:
    def __init__(self, policy: AdversaryPolicy, params=None):
        self.policy = policy
        self.params = params  # lets the adversary decode public structure
        self.transcript: list[TranscriptEntry] = []

    def decode(self, payload: bytes):
        try:
            return wire.decode(payload, self.params)
        except DecodeError:
            return None

    def consult(self, event: SimEvent):
        decoded = self.decode(event.payload)
        for rule in self.policy.rules:
            if rule._spent:
                continue
            if rule.match(event, decoded):
                if rule.once:
                    rule._spent = True
                return rule.action
        return None

    def record(self, event: SimEvent, action: str, payload: bytes | None = None):
        self.transcript.append(TranscriptEntry(
            event.at, event.src, event.dst, action,
            event.payload if payload is None else payload))


class Network:
    """Event loop, topology, adversaries, and delivery accounting."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        self.nodes: dict[str, SimNode] = {}
        self.links: dict[tuple[str, str], LinkSpec] = {}
        self.adversaries: dict[tuple[str, str], _Adversary] = {}
        self.handlers: dict[str, object] = {}
        self.now = 0
        self._seq = 0
        self._uid = 0
        self._heap: list = []
        self.accounting: dict[str, int] = {
            "sent": 0, "adversary_created": 0, "delivered": 0,
            "dropped_link": 0, "dropped_adversary": 0}

    # ---- topology ----------------------------------------------------------

    def add_node(self, node_id: str, tier: str = "thing",
                 role: str = "child") -> SimNode:
        node = SimNode(node_id, tier, role)
        self.nodes[node_id] = node
        return node

    def connect(self, link: LinkSpec) -> None:
        """Add a directed link; reconnecting an existing pair replaces
        its spec."""
        for end in (link.src, link.dst):
            if end not in self.nodes:
                raise UnknownNode(end)
        self.links[(link.src, link.dst)] = link

    def connect_duplex(self, a: str, b: str, base_latency_ms: int = 0,
                       jitter_ms: int = 0, drop_probability: float = 0.0) -> None:
        self.connect(LinkSpec(a, b, base_latency_ms, jitter_ms, drop_probability))
        self.connect(LinkSpec(b, a, base_latency_ms, jitter_ms, drop_probability))

    def route(self, src: str, dst: str) -> list[LinkSpec]:
        """Direct link, or a breadth-first path whose intermediate hops
        are proxy nodes."""
        if src not in self.nodes or dst not in self.nodes:
            raise UnknownNode(f"{src!r} or {dst!r}")
        if (src, dst) in self.links:
            return [self.links[(src, dst)]]
        frontier = [(src, [])]
        seen = {src}
        while frontier:
            here, path = frontier.pop(0)
            for (u, v), link in sorted(self.links.items()):
                if u != here or v in seen:
                    continue
                if v == dst:
                    return path + [link]
                if self.nodes[v].role == "proxy":
                    seen.add(v)
                    frontier.append((v, path + [link]))
        raise NoRoute(f"no path from {src!r} to {dst!r}")

    def set_handler(self, node_id: str, handler) -> None:
        """handler(network, event) runs at each delivery to node_id."""
        if node_id not in self.nodes:
            raise UnknownNode(node_id)
        self.handlers[node_id] = handler

    # ---- adversary ----------------------------------------------------------

    def attach_adversary(self, link: tuple[str, str], policy: AdversaryPolicy,
                         params=None) -> None:
        if link not in self.links:
            raise UnknownLink(f"{link!r}")
        self.adversaries[link] = _Adversary(policy, params)

    def transcript(self) -> list[TranscriptEntry]:
        """All adversary observations and actions, in event order."""
        entries = [e for adv in self.adversaries.values() for e in adv.transcript]
        entries.sort(key=lambda e: e.at)
        return entries

    def transcript_hex(self) -> list[str]:
        return [e.hex_line() for e in self.transcript()]

    def transcript_jsonl(self) -> str:
        return "\n".join(e.json_line() for e in self.transcript())

    # ---- event loop -----------------------------------------------------------

    def _push(self, at: int, kind: str, data) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (at, self._seq, kind, data))

    def send(self, src: str, dst: str, payload: bytes,
             at: int | None = None) -> SimEvent:
        """Schedule a payload along the route; returns the send event."""
        when = self.now if at is None else at
        path = self.route(src, dst)
        self._uid += 1
        event = SimEvent(when, src, dst, payload, self._uid)
        self.accounting["sent"] += 1
        self._push(when, "hop", (event, path, 0))
        return event

    def call_at(self, at: int, fn) -> None:
        """Run fn(network) at virtual time `at` (timers, retransmits)."""
        self._push(at, "timer", fn)

    def run_until(self, t: int | None = None) -> list[SimEvent]:
        """Process events up to and including time t (all events when t
        is None); returns the deliveries made during this call."""
        delivered: list[SimEvent] = []
        while self._heap and (t is None or self._heap[0][0] <= t):
            at, _, kind, data = heapq.heappop(self._heap)
            self.now = max(self.now, at)
            if kind == "timer":
                data(self)
                continue
            event, path, idx = data
            if idx >= len(path):
                node = self.nodes[event.dst]
                final = SimEvent(at, event.src, event.dst, event.payload,
                                 event.uid)
                node.inbox.append(final)
                delivered.append(final)
                self.accounting["delivered"] += 1
                handler = self.handlers.get(event.dst)
                if handler is not None:
                    handler(self, final)
                continue
            link = path[idx]
            self._traverse(SimEvent(at, event.src, event.dst, event.payload,
                                    event.uid), link, path, idx)
        if t is not None and t > self.now:
            self.now = t
        return delivered

    def run(self) -> list[SimEvent]:
        return self.run_until(None)

    def _traverse(self, event: SimEvent, link: LinkSpec, path, idx) -> None:
        payload = event.payload
        adversary = self.adversaries.get((link.src, link.dst))
        if adversary is not None:
            action = adversary.consult(event)
            caps = adversary.policy.capabilities
            if action is None:
                if "eavesdrop" in caps:
                    adversary.record(event, "observe")
            elif isinstance(action, Drop):
                adversary.record(event, "drop")
                self.accounting["dropped_adversary"] += 1
                return
            elif isinstance(action, Delay):
                adversary.record(event, f"delay+{action.ms}")
                self._hop_forward(event, payload, link, path, idx, extra=action.ms)
                return
            elif isinstance(action, (Duplicate, Replay)):
                label = ("duplicate" if isinstance(action, Duplicate)
                         else f"replay+{action.delay_ms}")
                adversary.record(event, label)
                self._hop_forward(event, payload, link, path, idx)
                self._uid += 1
                copy = SimEvent(event.at + action.delay_ms, event.src,
                                event.dst, payload, self._uid)
                self.accounting["adversary_created"] += 1
                self._push(copy.at, "hop", (copy, path, idx))
                return
            elif isinstance(action, Modify):
                new_payload = action.transform(payload, adversary.decode(payload))
                adversary.record(event, "modify", new_payload)
                self._hop_forward(event, new_payload, link, path, idx)
                return
            elif isinstance(action, Inject):
                adversary.record(event, "inject", action.payload)
                self._hop_forward(event, payload, link, path, idx)
                self._uid += 1
                extra = SimEvent(event.at + action.delay_ms, event.src,
                                 event.dst, action.payload, self._uid)
                self.accounting["adversary_created"] += 1
                self._push(extra.at, "hop", (extra, path, idx))
                return
            else:
                raise TypeError(f"unknown adversary action {action!r}")
        self._hop_forward(event, payload, link, path, idx)

    def _hop_forward(self, event: SimEvent, payload: bytes, link: LinkSpec,
                     path, idx, extra: int = 0) -> None:
        if link.drop_probability and self.rng.random() < link.drop_probability:
            self.accounting["dropped_link"] += 1
            return
        latency = link.base_latency_ms + extra
        if link.jitter_ms:
            latency += self.rng.randint(0, link.jitter_ms)
        nxt = SimEvent(event.at + latency, event.src, event.dst, payload,
                       event.uid)
        self._push(nxt.at, "hop", (nxt, path, idx + 1))


class SimClock:
    """Node clock bound to simulated time, with optional fixed skew."""

    def __init__(self, network: Network, skew_ms: int = 0):
        self.network = network
        self.skew_ms = skew_ms

    def now(self) -> int:
        return self.network.now + self.skew_ms
