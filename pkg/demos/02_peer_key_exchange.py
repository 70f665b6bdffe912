"""Two devices agree on a private key via the custodian they both trust.

The camera proposes a key for the door lock; the custodian re-seals the
proposal for the lock; the lock challenges the camera with a nonce under
the proposed key; the echoed nonce proves both ends hold the same key.
"""

import random

from fogca import authority, curve
from fogca.child import ChildState
from fogca.crypto import ManualClock
from fogca.errors import NoPendingChallenge
from fogca.integrity import AffinityStore
from fogca.scenarios import device_profile

params = curve.toy17()
rng = random.Random(5)
clock = ManualClock()
store = AffinityStore()
ca, announcement = authority.setup(params, rng, clock, store)


def enroll(ident: bytes) -> ChildState:
    channel_key = rng.randbytes(32)
    profile = device_profile(ident)
    store.provision(profile, channel_key)
    device = ChildState(ident, announcement, channel_key,
                        random.Random(ident), clock)
    clock.advance(9)
    resp = ca.register_child(device.request_registration(), profile)
    device.confirm_auth_key(resp, ca.handle_auth_request)
    return device


camera = enroll(b"cam-01")
lock = enroll(b"lock-02")

# camera -> custodian: proposal sealed under the camera's session key
proposal = camera.peer_init(b"lock-02")
print("camera proposed key:", camera.proposed[b"lock-02"].hex())

# custodian -> lock: same proposal, re-sealed for the lock
target, relay = ca.relay_peer_request(b"cam-01", proposal)
print("custodian relays to:", target.decode())

# lock -> camera: nonce challenge under the proposed key
initiator, challenge = lock.peer_respond(relay)
print("lock challenges:", initiator.decode())

# camera -> lock: the echoed nonce
peer, proof = camera.peer_accept(challenge)
lock.peer_verify(proof, initiator)
print("established:", camera.peer_sessions[b"lock-02"].hex())
assert camera.peer_sessions[b"lock-02"] == lock.peer_sessions[b"cam-01"]

# the challenge is single use: replaying the proof gets refused
try:
    lock.peer_verify(proof, initiator)
except NoPendingChallenge as exc:
    print("proof replay refused:", exc)
