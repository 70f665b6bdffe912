"""Canonical byte encodings for every protocol message.

One tag byte selects the variant; integers are big-endian; identities
are length-prefixed UTF-8 of 1-64 bytes; points use the curve module's
fixed-width encoding, so decoding a point-bearing message requires the
curve parameters (the announcement itself is self-describing).

encode/decode form an identity on every variant, and decode never
raises anything but DecodeError on malformed input.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import curve
from .crypto import SealedBox
from .errors import DecodeError

TAG_ANNOUNCEMENT = 0x01
TAG_REG_REQUEST = 0x02
TAG_REG_RESPONSE = 0x03
TAG_AUTH_REQUEST = 0x04
TAG_AUTH_RESPONSE = 0x05
TAG_PEER_INIT = 0x06
TAG_PEER_RELAY = 0x07
TAG_PEER_CHALLENGE = 0x08
TAG_PEER_PROOF = 0x09

MAX_IDENTITY_LEN = 64


@dataclass(frozen=True)
class Announcement:
    """Public system parameters: curve, authority public key, hash ids."""
    params: curve.CurveParams
    public_key: curve.CurvePoint
    hash_ids: tuple[str, str, str] = (curve.H1_ID, curve.H2_ID, curve.H3_ID)


@dataclass(frozen=True)
class RegistrationRequest:
    child_id: bytes


@dataclass(frozen=True)
class RegistrationResponse:
    """Authentication key, sealed under the registration channel key."""
    sealed_auth_key: SealedBox


@dataclass(frozen=True)
class AuthRequest:
    """Client half of mutual authentication."""
    child_id: bytes
    blinded: curve.CurvePoint      # random point masked by the auth key
    x_proof: curve.CurvePoint      # x-coordinate of the random point, times P
    sent_at: int


@dataclass(frozen=True)
class AuthResponse:
    """Server half: masked server point plus key-confirmation point."""
    blinded: curve.CurvePoint
    key_check: curve.CurvePoint
    sent_at: int


@dataclass(frozen=True)
class PeerInit:
    """Initiator -> authority: target id, proposed key, spare nonce."""
    peer_box: SealedBox
    key_box: SealedBox
    nonce_box: SealedBox


@dataclass(frozen=True)
class PeerRelay:
    """Authority -> responder: initiator id and proposed key, re-sealed."""
    initiator_box: SealedBox
    key_box: SealedBox


@dataclass(frozen=True)
class PeerChallenge:
    """Responder -> initiator under the proposed key: own id and nonce."""
    identity_box: SealedBox
    nonce_box: SealedBox


@dataclass(frozen=True)
class PeerProof:
    """Initiator -> responder: the challenge nonce, sealed back."""
    nonce_box: SealedBox


ProtocolMessage = (Announcement | RegistrationRequest | RegistrationResponse
                   | AuthRequest | AuthResponse | PeerInit | PeerRelay
                   | PeerChallenge | PeerProof)


def _enc_varint(v: int) -> bytes:
    raw = v.to_bytes((v.bit_length() + 7) // 8 or 1, "big")
    return len(raw).to_bytes(2, "big") + raw


def _enc_identity(ident: bytes) -> bytes:
    if not 1 <= len(ident) <= MAX_IDENTITY_LEN:
        raise ValueError("identity must be 1-64 bytes")
    ident.decode("utf-8")  # must be valid UTF-8
    return bytes([len(ident)]) + ident


def _enc_point(params: curve.CurveParams, pt: curve.CurvePoint) -> bytes:
    raw = curve.encode_point(params, pt)
    # infinity is 1 byte, finite points 1+2w: prefix the length so the
    # stream stays self-delimiting either way
    return bytes([len(raw)]) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, k: int) -> bytes:
        if self.pos + k > len(self.data):
            raise DecodeError("truncated message")
        out = self.data[self.pos:self.pos + k]
        self.pos += k
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return int.from_bytes(self.take(8), "big")

    def varint(self) -> int:
        n = int.from_bytes(self.take(2), "big")
        return int.from_bytes(self.take(n), "big")

    def identity(self) -> bytes:
        n = self.u8()
        if not 1 <= n <= MAX_IDENTITY_LEN:
            raise DecodeError("bad identity length")
        ident = self.take(n)
        try:
            ident.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("identity is not UTF-8") from exc
        return ident

    def point(self, params: curve.CurveParams) -> curve.CurvePoint:
        n = self.u8()
        return curve.decode_point(params, self.take(n))

    def short_str(self) -> str:
        n = self.u8()
        try:
            return self.take(n).decode("ascii")
        except UnicodeDecodeError as exc:
            raise DecodeError("bad ascii string") from exc

    def box(self) -> SealedBox:
        # peek the internal ciphertext length to slice the exact span
        head = 12 + 4
        if self.pos + head > len(self.data):
            raise DecodeError("sealed box truncated")
        clen = int.from_bytes(self.data[self.pos + 12:self.pos + head], "big")
        return SealedBox.from_bytes(self.take(head + clen + 16))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise DecodeError("trailing bytes after message")


def encode(msg: ProtocolMessage, params: curve.CurveParams | None = None) -> bytes:
    """Serialize a protocol message; point-bearing variants need params."""
    if isinstance(msg, Announcement):
        cp = msg.params
        out = [bytes([TAG_ANNOUNCEMENT]), _enc_varint(cp.p), _enc_varint(cp.a),
               _enc_varint(cp.b), _enc_varint(cp.order_n),
               _enc_varint(cp.cofactor), _enc_point(cp, cp.base_point),
               _enc_point(cp, msg.public_key)]
        for hid in msg.hash_ids:
            raw = hid.encode("ascii")
            out.append(bytes([len(raw)]) + raw)
        return b"".join(out)
    if isinstance(msg, RegistrationRequest):
        return bytes([TAG_REG_REQUEST]) + _enc_identity(msg.child_id)
    if isinstance(msg, RegistrationResponse):
        return bytes([TAG_REG_RESPONSE]) + msg.sealed_auth_key.to_bytes()
    if isinstance(msg, AuthRequest):
        if params is None:
            raise ValueError("curve params required to encode AuthRequest")
        return (bytes([TAG_AUTH_REQUEST]) + _enc_identity(msg.child_id)
                + _enc_point(params, msg.blinded)
                + _enc_point(params, msg.x_proof)
                + msg.sent_at.to_bytes(8, "big"))
    if isinstance(msg, AuthResponse):
        if params is None:
            raise ValueError("curve params required to encode AuthResponse")
        return (bytes([TAG_AUTH_RESPONSE]) + _enc_point(params, msg.blinded)
                + _enc_point(params, msg.key_check)
                + msg.sent_at.to_bytes(8, "big"))
    if isinstance(msg, PeerInit):
        return (bytes([TAG_PEER_INIT]) + msg.peer_box.to_bytes()
                + msg.key_box.to_bytes() + msg.nonce_box.to_bytes())
    if isinstance(msg, PeerRelay):
        return (bytes([TAG_PEER_RELAY]) + msg.initiator_box.to_bytes()
                + msg.key_box.to_bytes())
    if isinstance(msg, PeerChallenge):
        return (bytes([TAG_PEER_CHALLENGE]) + msg.identity_box.to_bytes()
                + msg.nonce_box.to_bytes())
    if isinstance(msg, PeerProof):
        return bytes([TAG_PEER_PROOF]) + msg.nonce_box.to_bytes()
    raise TypeError(f"not a protocol message: {msg!r}")


def decode(data: bytes, params: curve.CurveParams | None = None) -> ProtocolMessage:
    """Parse bytes into a message or raise DecodeError.  Never raises
    anything else, no matter the input."""
    try:
        return _decode(data, params)
    except DecodeError:
        raise
    except Exception as exc:  # noqa: BLE001 - fuzz guarantee
        raise DecodeError(f"malformed message: {exc}") from exc


def _decode(data: bytes, params: curve.CurveParams | None) -> ProtocolMessage:
    if not data:
        raise DecodeError("empty message")
    r = _Reader(data)
    tag = r.u8()
    if tag == TAG_ANNOUNCEMENT:
        p, a, b = r.varint(), r.varint(), r.varint()
        n, cofactor = r.varint(), r.varint()
        if p < 2 or n < 2:
            raise DecodeError("bad announced field/order")
        # unvalidated shell: enough to parse fixed-width points, then
        # make_params re-checks everything including n * base == O
        shell = curve.CurveParams(p, a % p, b % p, curve.INFINITY, n, cofactor)
        base = r.point(shell)
        pub = r.point(shell)
        if base.is_infinity:
            raise DecodeError("announced base point is infinity")
        try:
            cp = curve.make_params(p, a, b, base.x, base.y, n, cofactor)
        except ValueError as exc:
            raise DecodeError(f"invalid announced curve: {exc}") from exc
        hash_ids = (r.short_str(), r.short_str(), r.short_str())
        r.done()
        return Announcement(cp, pub, hash_ids)
    if tag == TAG_REG_REQUEST:
        ident = r.identity()
        r.done()
        return RegistrationRequest(ident)
    if tag == TAG_REG_RESPONSE:
        box = r.box()
        r.done()
        return RegistrationResponse(box)
    if tag == TAG_AUTH_REQUEST:
        if params is None:
            raise DecodeError("curve params required to decode AuthRequest")
        ident = r.identity()
        blinded = r.point(params)
        x_proof = r.point(params)
        sent_at = r.u64()
        r.done()
        return AuthRequest(ident, blinded, x_proof, sent_at)
    if tag == TAG_AUTH_RESPONSE:
        if params is None:
            raise DecodeError("curve params required to decode AuthResponse")
        blinded = r.point(params)
        key_check = r.point(params)
        sent_at = r.u64()
        r.done()
        return AuthResponse(blinded, key_check, sent_at)
    if tag == TAG_PEER_INIT:
        msg = PeerInit(r.box(), r.box(), r.box())
        r.done()
        return msg
    if tag == TAG_PEER_RELAY:
        msg = PeerRelay(r.box(), r.box())
        r.done()
        return msg
    if tag == TAG_PEER_CHALLENGE:
        msg = PeerChallenge(r.box(), r.box())
        r.done()
        return msg
    if tag == TAG_PEER_PROOF:
        msg = PeerProof(r.box())
        r.done()
        return msg
    raise DecodeError(f"unknown message tag {tag:#04x}")
