"""Message-driven protocol drivers for simulated nodes.

A host owns a protocol state (authority or child) and reacts to each
delivered payload: decode, run the matching operation, send the reply.
Refusals never cross the wire; they are recorded as verdicts on the
refusing side, which is what the attack scenarios assert on.

Child node ids equal their protocol identity (UTF-8), so the authority
can route peer relays.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import wire
from .authority import AuthorityState
from .child import ChildState
from .errors import FogcaError
from .simnet import Network, SimEvent


@dataclass
class Verdict:
    at: int
    kind: str      # e.g. "ReplayDetected", "key-agreement"
    detail: str = ""


class AuthorityHost:
    """Drives an AuthorityState on one network node."""

    def __init__(self, node_id: str, state: AuthorityState,
                 reported_profiles=None):
        self.node_id = node_id
        self.state = state
        # device reports arrive out of band with the registration request
        self.reported_profiles = reported_profiles or {}
        self.verdicts: list[Verdict] = []

    def attach(self, net: Network) -> None:
        net.set_handler(self.node_id, self.handle)

    def handle(self, net: Network, event: SimEvent) -> None:
        try:
            msg = wire.decode(event.payload, self.state.params)
        except FogcaError as exc:
            self.verdicts.append(Verdict(net.now, type(exc).__name__, str(exc)))
            return
        try:
            if isinstance(msg, wire.RegistrationRequest):
                profile = self.reported_profiles.get(msg.child_id)
                if profile is None:
                    raise FogcaError(f"no device report for {msg.child_id!r}")
                resp = self.state.register_child(msg, profile)
                net.send(self.node_id, event.src,
                         wire.encode(resp, self.state.params))
            elif isinstance(msg, wire.AuthRequest):
                resp = self.state.handle_auth_request(msg)
                net.send(self.node_id, event.src,
                         wire.encode(resp, self.state.params))
            elif isinstance(msg, wire.PeerInit):
                from_id = event.src.encode()
                target, relay = self.state.relay_peer_request(from_id, msg)
                net.send(self.node_id, target.decode(),
                         wire.encode(relay, self.state.params))
            else:
                self.verdicts.append(Verdict(
                    net.now, "UnexpectedMessage", type(msg).__name__))
        except FogcaError as exc:
            self.verdicts.append(Verdict(net.now, type(exc).__name__, str(exc)))


class ChildHost:
    """Drives a ChildState: completes registration (with the embedded
    key-confirmation round) and both peer roles without orchestration."""

    def __init__(self, node_id: str, state: ChildState, authority_node: str):
        self.node_id = node_id
        self.state = state
        self.authority_node = authority_node
        self.confirming = False
        self.registered = False
        self.established: list[bytes] = []
        self.verdicts: list[Verdict] = []

    def attach(self, net: Network) -> None:
        net.set_handler(self.node_id, self.handle)

    # -- actions ---------------------------------------------------------------

    def start_registration(self, net: Network) -> None:
        net.send(self.node_id, self.authority_node,
                 wire.encode(self.state.request_registration()))

    def start_auth(self, net: Network) -> None:
        net.send(self.node_id, self.authority_node,
                 wire.encode(self.state.auth_init(), self.state.params))

    def start_peer(self, net: Network, peer_id: bytes) -> None:
        net.send(self.node_id, self.authority_node,
                 wire.encode(self.state.peer_init(peer_id), self.state.params))

    # -- reactions ----------------------------------------------------------------

    def handle(self, net: Network, event: SimEvent) -> None:
        try:
            msg = wire.decode(event.payload, self.state.params)
        except FogcaError as exc:
            self.verdicts.append(Verdict(net.now, type(exc).__name__, str(exc)))
            return
        try:
            if isinstance(msg, wire.RegistrationResponse):
                self.state.install_auth_key(msg)
                self.confirming = True
                self.start_auth(net)
            elif isinstance(msg, wire.AuthResponse):
                self.state.auth_finish(msg)
                if self.confirming:
                    self.confirming = False
                    self.registered = True
                self.verdicts.append(Verdict(net.now, "key-agreement", "OK"))
            elif isinstance(msg, wire.PeerRelay):
                initiator, challenge = self.state.peer_respond(msg)
                net.send(self.node_id, initiator.decode(),
                         wire.encode(challenge, self.state.params))
            elif isinstance(msg, wire.PeerChallenge):
                peer_id, proof = self.state.peer_accept(msg)
                net.send(self.node_id, peer_id.decode(),
                         wire.encode(proof, self.state.params))
            elif isinstance(msg, wire.PeerProof):
                from_id = event.src.encode()
                self.state.peer_verify(msg, from_id)
                self.established.append(from_id)
                self.verdicts.append(Verdict(net.now, "peer-established",
                                             event.src))
            else:
                self.verdicts.append(Verdict(
                    net.now, "UnexpectedMessage", type(msg).__name__))
        except FogcaError as exc:
            self.verdicts.append(Verdict(net.now, type(exc).__name__, str(exc)))
            if self.confirming:
                self.confirming = False
                self.state.auth_key = None
