"""Exception types shared across the package.

Every refusal a protocol party can issue is a distinct class so tests and
scenario harnesses can assert on the exact verdict.  All of them derive
from FogcaError; refusals that terminate a protocol run derive from
Refusal.
"""


class FogcaError(Exception):
    """Base class for every error raised by this package."""


# ---- curve / encoding ----------------------------------------------------

class MismatchedCurve(FogcaError):
    """A point does not lie on the curve it was used with."""


class HashToPointFailure(FogcaError):
    """Try-and-increment exhausted its counter budget (pathological curve)."""


class OracleRefused(FogcaError):
    """A brute-force oracle was asked to run on a group that is too large."""


class NotInSubgroup(FogcaError):
    """Exhaustive discrete-log search found no solution."""


class DecodeError(FogcaError):
    """Wire bytes could not be decoded (bad tag, truncation, bad point)."""


class WidthMismatch(FogcaError):
    """A field-element encoding has the wrong byte width."""


# ---- symmetric crypto ----------------------------------------------------

class AuthFailure(FogcaError):
    """Authenticated decryption failed: wrong key or tampered ciphertext."""


# ---- protocol refusals ---------------------------------------------------

class Refusal(FogcaError):
    """A party refused to continue the protocol."""


class UnknownDevice(Refusal):
    """No affinity record exists for this identity."""


class IntegrityMismatch(Refusal):
    """Reported device profile does not match the affinity baseline."""

    def __init__(self, diff=(), countermeasure=None):
        super().__init__(f"integrity mismatch in {', '.join(diff) or 'profile'}")
        self.diff = tuple(diff)
        self.countermeasure = countermeasure


class DeviceUntrusted(Refusal):
    """Device is quarantined or blacklisted and may not run protocols."""


class DuplicateRegistration(Refusal):
    """Identity already holds a live registration."""


class NotRegistered(Refusal):
    """Child has no authentication key installed."""


class StaleTimestamp(Refusal):
    """Message timestamp is outside the freshness window."""


class ReplayDetected(Refusal):
    """Identical (identity, timestamp) pair was already accepted."""


class BadProof(Refusal):
    """The x-coordinate check failed: wrong or forged authentication key."""


class Revoked(Refusal):
    """Identity is on the revocation list."""


class Expired(Refusal):
    """Short-lived registration has passed its lifetime."""


class KeyMismatch(Refusal):
    """Session-key confirmation value does not verify."""


class ConfirmationFailure(Refusal):
    """The key-confirmation round after registration failed."""


class NoSession(Refusal):
    """No live session key exists for the requested identity."""


class NoCaSession(Refusal):
    """Child holds no session key with the authority."""


class TargetRevoked(Refusal):
    """Peer-exchange target identity is revoked."""


class IdentityMismatch(Refusal):
    """Decrypted peer identity differs from the intended peer."""


class NonceMismatch(Refusal):
    """Returned challenge nonce does not match the stored one."""


class NoPendingChallenge(Refusal):
    """No outstanding challenge exists for this peer (single-use)."""


class UnknownId(FogcaError):
    """Operation references an identity that was never registered."""


class NonCanonicalProfile(FogcaError):
    """Device profile lists are not sorted and duplicate-free."""


class UntrustedProvenance(FogcaError):
    """Profile update did not arrive over the trusted parent channel."""


# ---- simulation ----------------------------------------------------------

class UnknownNode(FogcaError):
    """Topology operation references a node that does not exist."""


class UnknownLink(FogcaError):
    """Adversary attachment references a link that does not exist."""


class NoRoute(FogcaError):
    """No path (direct or via proxy nodes) exists between endpoints."""


class UnknownProfile(FogcaError):
    """Named link profile is not present in the configuration."""
