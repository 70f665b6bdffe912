"""Cold start: bring up a CA, register a device, agree on a session key.

Walks the first three protocol phases on the toy curve so every value
is small enough to read, then repeats the handshake on the 256-bit
production curve.
"""

import random

from fogca import authority, curve, wire
from fogca.child import ChildState
from fogca.crypto import ManualClock
from fogca.integrity import AffinityStore
from fogca.scenarios import device_profile

# --- phase 1: system settings and announcement ------------------------------

params = curve.toy17()
rng = random.Random(2024)
clock = ManualClock()
store = AffinityStore()

ca, announcement = authority.setup(params, rng, clock, store)
print("curve:", params)
print("CA public key:", announcement.public_key)
print("announcement bytes:", wire.encode(announcement).hex()[:60], "...")

# --- phase 2: provisioning and registration ----------------------------------

ident = b"thermostat-7"
channel_key = rng.randbytes(32)  # pre-shared with the manufacturer
profile = device_profile(ident)
store.provision(profile, channel_key)

device = ChildState(ident, announcement, channel_key, random.Random(7), clock)
clock.advance(15)

response = ca.register_child(device.request_registration(), profile)
print("\nsealed auth key on the wire:",
      wire.encode(response).hex()[:60], "...")

# acceptance = the seal authenticates AND a key-confirmation round works
session_key = device.confirm_auth_key(response, ca.handle_auth_request)
print("auth key installed:", device.auth_key)
print("confirmed session key:", session_key.hex())
assert ca.sessions[ident][1] == session_key

# --- phase 3: a later mutual authentication ----------------------------------

clock.advance(60_000)  # much later, same registration
request = device.auth_init()
print("\nauth request:", wire.encode(request, params).hex())
session_key = device.auth_finish(ca.handle_auth_request(request))
print("fresh session key:", session_key.hex())
assert ca.sessions[ident][1] == session_key

# --- the same flow at production size ----------------------------------------

prod = curve.prod256()
rng = random.Random(99)
clock = ManualClock()
store = AffinityStore()
ca, announcement = authority.setup(prod, rng, clock, store)
channel_key = rng.randbytes(32)
store.provision(profile, channel_key)
device = ChildState(ident, announcement, channel_key, random.Random(1), clock)
clock.advance(10)
response = ca.register_child(device.request_registration(), profile)
key = device.confirm_auth_key(response, ca.handle_auth_request)
print("\nprod256 handshake key:", key.hex())
print("both sides agree:", ca.sessions[ident][1] == key)
