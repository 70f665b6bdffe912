"""The certificate authority / custodian side of the protocol suite.

One AuthorityState is one logical CA, regardless of where its service
runs (cloud or fog): operations are serialized per instance.  It issues
identity-based authentication keys, answers mutual-authentication
requests, relays peer key proposals between children it shares sessions
with, and maintains the revocation list and short-lived registrations.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import curve
from .crypto import ManualClock, check_freshness, derive_session_key, open_box, seal
from .errors import (
    AuthFailure,
    BadProof,
    DeviceUntrusted,
    DuplicateRegistration,
    Expired,
    IntegrityMismatch,
    NoSession,
    ReplayDetected,
    Revoked,
    StaleTimestamp,
    TargetRevoked,
    UnknownDevice,
    UnknownId,
)
from .integrity import AffinityStore, DeviceProfile, TrustState
from .wire import (
    Announcement,
    AuthRequest,
    AuthResponse,
    PeerInit,
    PeerRelay,
    RegistrationRequest,
    RegistrationResponse,
)

DEFAULT_FRESHNESS_WINDOW_MS = 2000

REVOKE_REASONS = ("compromise", "expiry", "policy")


@dataclass
class RegistrationRecord:
    """Issued authentication key plus issue metadata."""
    child_id: bytes
    auth_key: curve.CurvePoint
    issued_at: int
    lifetime_ms: int | None  # None = no scheduled expiry
    channel_key: bytes

    def expired(self, now_ms: int) -> bool:
        return (self.lifetime_ms is not None
                and now_ms > self.issued_at + self.lifetime_ms)


@dataclass(frozen=True)
class CrlEntry:
    child_id: bytes
    revoked_at: int
    reason: str


class AuthorityState:
    """CA keypair, registry, replay cache, sessions, CRL.

    Construct through `setup`, which draws the keypair and produces the
    broadcast announcement.
    """

    def __init__(self, params: curve.CurveParams, private_key: int, rng,
                 clock=None, affinity: AffinityStore | None = None,
                 freshness_window_ms: int = DEFAULT_FRESHNESS_WINDOW_MS):
        self.params = params
        self.private_key = private_key
        self.public_key = curve.scalar_mul(params, private_key, params.base_point)
        self.rng = rng
        self.clock = clock if clock is not None else ManualClock()
        self.affinity = affinity if affinity is not None else AffinityStore()
        self.freshness_window_ms = freshness_window_ms
        self.registry: dict[bytes, RegistrationRecord] = {}
        self.replay_cache: set[tuple[bytes, int]] = set()
        self.sessions: dict[bytes, tuple[int, bytes]] = {}
        self.crl: list[CrlEntry] = []
        self.ever_registered: set[bytes] = set()
        # counters for workload reporting
        self.tasks_handled = 0

    # ---- announcement -----------------------------------------------------

    def announcement(self) -> Announcement:
        return Announcement(self.params, self.public_key)

    # ---- revocation helpers ----------------------------------------------

    def is_revoked(self, child_id: bytes) -> bool:
        return any(e.child_id == child_id for e in self.crl)

    def _latest_crl_reason(self, child_id: bytes) -> str | None:
        for entry in reversed(self.crl):
            if entry.child_id == child_id:
                return entry.reason
        return None

    def _refuse_if_unusable(self, child_id: bytes, now_ms: int) -> RegistrationRecord:
        """Common gate for authentication and relay requests: revocation,
        registration, trust, and short-key expiry."""
        reason = self._latest_crl_reason(child_id)
        if reason == "expiry":
            raise Expired(f"{child_id!r} registration expired")
        if reason is not None:
            raise Revoked(f"{child_id!r} is on the revocation list")
        record = self.registry.get(child_id)
        if record is None:
            raise UnknownDevice(f"{child_id!r} is not registered")
        affinity = self.affinity.records.get(child_id)
        if affinity is not None and affinity.trust in (
                TrustState.QUARANTINED, TrustState.BLACKLISTED):
            raise DeviceUntrusted(f"{child_id!r} is {affinity.trust.value}")
        if record.expired(now_ms):
            raise Expired(f"{child_id!r} registration expired")
        return record

    # ---- registration (issue the ID-based authentication key) -------------

    def register_child(self, req: RegistrationRequest, profile: DeviceProfile,
                       lifetime_ms: int | None = None,
                       countermeasure_policy: str = "quarantine") -> RegistrationResponse:
        """Verify device integrity against the affinity baseline, then
        issue the authentication key sealed under the pre-shared
        registration channel key."""
        now = self.clock.now()
        self.tasks_handled += 1
        record = self.affinity.get(req.child_id)  # UnknownDevice if absent
        if record.trust in (TrustState.QUARANTINED, TrustState.BLACKLISTED):
            raise DeviceUntrusted(f"{req.child_id!r} is {record.trust.value}")
        verdict = self.affinity.verify(req.child_id, profile, now,
                                       countermeasure_policy)
        if not verdict.match:
            raise IntegrityMismatch(verdict.diff,
                                    countermeasure=record.trust.value)
        if req.child_id in self.registry and not self.is_revoked(req.child_id):
            raise DuplicateRegistration(f"{req.child_id!r} already registered")
        ident_point = curve.hash_to_point(self.params, req.child_id)
        auth_key = curve.scalar_mul(self.params, self.private_key, ident_point)
        box = seal(record.channel_key,
                   curve.encode_point(self.params, auth_key), self.rng)
        self.registry[req.child_id] = RegistrationRecord(
            req.child_id, auth_key, now, lifetime_ms, record.channel_key)
        self.crl = [e for e in self.crl if e.child_id != req.child_id]
        self.sessions.pop(req.child_id, None)
        self.ever_registered.add(req.child_id)
        return RegistrationResponse(box)

    # ---- mutual authentication (responder) --------------------------------

    def handle_auth_request(self, req: AuthRequest) -> AuthResponse:
        """Verify the client's proof and answer with the masked server
        point plus the key-confirmation point.

        The (identity, timestamp) pair is cached before the proof is
        checked, so an identical request inside the freshness window is
        refused as a replay even though its timestamp is still fresh.
        """
        now = self.clock.now()
        self.tasks_handled += 1
        record = self._refuse_if_unusable(req.child_id, now)
        if not check_freshness(req.sent_at, now, self.freshness_window_ms):
            raise StaleTimestamp(f"T1={req.sent_at} vs now={now}")
        cache_key = (req.child_id, req.sent_at)
        if cache_key in self.replay_cache:
            raise ReplayDetected(f"duplicate (id, T1) {cache_key!r}")
        self._purge_replay_cache(now)
        self.replay_cache.add(cache_key)

        params = self.params
        ident_point = curve.hash_to_point(params, req.child_id)
        t1 = curve.hash_to_scalar(params, curve.H2_TAG,
                                  [req.sent_at.to_bytes(8, "big")])
        # recover the client's random point: M_C - t1 * (private * Q_id)
        mask = curve.scalar_mul(params, t1 * self.private_key, ident_point)
        recovered = curve.point_sub(params, req.blinded, mask)
        if recovered.is_infinity:
            raise BadProof("recovered point is infinity")
        x_c = recovered.x
        if req.x_proof != curve.scalar_mul(params, x_c, params.base_point):
            raise BadProof("x-coordinate proof failed")

        t2_ms = now
        server_scalar = curve.random_scalar(params, self.rng)
        server_point = curve.scalar_mul(params, server_scalar, params.base_point)
        t2 = curve.hash_to_scalar(params, curve.H2_TAG,
                                  [t2_ms.to_bytes(8, "big")])
        blinded = curve.point_add(
            params, server_point,
            curve.scalar_mul(params, t2 * self.private_key, ident_point))
        w = params.field_width
        k_scalar, key = derive_session_key(
            params,
            ident_point.x.to_bytes(w, "big"),
            x_c.to_bytes(w, "big"),
            server_point.x.to_bytes(w, "big"))
        key_check = curve.scalar_mul(params, k_scalar + server_point.x,
                                     params.base_point)
        self.sessions[req.child_id] = (k_scalar, key)
        return AuthResponse(blinded, key_check, t2_ms)

    def _purge_replay_cache(self, now_ms: int) -> None:
        if len(self.replay_cache) > 4096:
            horizon = now_ms - self.freshness_window_ms
            self.replay_cache = {
                (cid, t1) for cid, t1 in self.replay_cache if t1 >= horizon}

    # ---- peer key relay ----------------------------------------------------

    def relay_peer_request(self, from_id: bytes,
                           msg: PeerInit) -> tuple[bytes, PeerRelay]:
        """Open the initiator's proposal, re-seal it for the target, and
        return (target_id, relay).  No copy of the proposed key is kept."""
        self.tasks_handled += 1
        sender = self.sessions.get(from_id)
        if sender is None:
            raise NoSession(f"no session with {from_id!r}")
        target = open_box(sender[1], msg.peer_box)
        proposed = bytearray(open_box(sender[1], msg.key_box))
        try:
            if not 1 <= len(target) <= 64:
                raise AuthFailure("bad target identity length")
            if len(proposed) != 32:
                raise AuthFailure("bad proposed key length")
            if self.is_revoked(target):
                raise TargetRevoked(f"{target!r} is revoked")
            receiver = self.sessions.get(target)
            if receiver is None:
                raise NoSession(f"no session with {target!r}")
            relay = PeerRelay(
                initiator_box=seal(receiver[1], from_id, self.rng),
                key_box=seal(receiver[1], bytes(proposed), self.rng))
            return target, relay
        finally:
            for i in range(len(proposed)):  # drop our copy of the key
                proposed[i] = 0

    # ---- revocation and short-lived keys -----------------------------------

    def revoke(self, child_id: bytes, reason: str) -> CrlEntry:
        if reason not in REVOKE_REASONS:
            raise ValueError(f"reason must be one of {REVOKE_REASONS}")
        if child_id not in self.ever_registered:
            raise UnknownId(f"{child_id!r} was never registered")
        entry = CrlEntry(child_id, self.clock.now(), reason)
        self.crl.append(entry)
        self.registry.pop(child_id, None)
        self.sessions.pop(child_id, None)
        return entry

    def purge_expired(self, now_ms: int | None = None) -> int:
        """Drop expired short-lived registrations, adding CRL entries."""
        now = self.clock.now() if now_ms is None else now_ms
        gone = [cid for cid, rec in self.registry.items() if rec.expired(now)]
        for cid in gone:
            self.registry.pop(cid)
            self.sessions.pop(cid, None)
            self.crl.append(CrlEntry(cid, now, "expiry"))
        return len(gone)

    # ---- persistence: line-oriented, hex fields ----------------------------

    def dump_records(self) -> list[str]:
        lines = []
        for rec in self.registry.values():
            lines.append(" ".join([
                "REG", rec.child_id.hex(),
                curve.encode_point(self.params, rec.auth_key).hex(),
                str(rec.issued_at),
                "-" if rec.lifetime_ms is None else str(rec.lifetime_ms),
                rec.channel_key.hex()]))
        for entry in self.crl:
            lines.append(" ".join([
                "CRL", entry.child_id.hex(), str(entry.revoked_at),
                entry.reason]))
        return lines

    def load_records(self, lines) -> None:
        """Restore registry and CRL from `dump_records` output."""
        self.registry.clear()
        self.crl = []
        for line in lines:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "REG":
                _, cid, key_hex, issued, lifetime, channel = parts
                child_id = bytes.fromhex(cid)
                self.registry[child_id] = RegistrationRecord(
                    child_id,
                    curve.decode_point(self.params, bytes.fromhex(key_hex)),
                    int(issued),
                    None if lifetime == "-" else int(lifetime),
                    bytes.fromhex(channel))
                self.ever_registered.add(child_id)
            elif parts[0] == "CRL":
                _, cid, at, reason = parts
                child_id = bytes.fromhex(cid)
                self.crl.append(CrlEntry(child_id, int(at), reason))
                self.ever_registered.add(child_id)
            else:
                raise ValueError(f"unknown record type {parts[0]!r}")

    def save_records(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.dump_records()) + "\n")

    def load_records_file(self, path) -> None:
        with open(path) as fh:
            self.load_records(fh)


def setup(params: curve.CurveParams, rng, clock=None,
          affinity: AffinityStore | None = None,
          freshness_window_ms: int = DEFAULT_FRESHNESS_WINDOW_MS,
          ) -> tuple[AuthorityState, Announcement]:
    """System setup: draw the CA keypair and build the announcement
    every client receives.  The private key never leaves the state."""
    private = curve.random_scalar(params, rng)
    state = AuthorityState(params, private, rng, clock, affinity,
                           freshness_window_ms)
    return state, state.announcement()
