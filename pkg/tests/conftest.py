import hashlib
import random

import pytest

from fogca import authority, curve
from fogca.child import ChildState
from fogca.crypto import ManualClock
from fogca.integrity import AffinityStore, DeviceProfile


@pytest.fixture(scope="session")
def toy():
    return curve.toy17()


@pytest.fixture(scope="session")
def prod():
    return curve.prod256()


def make_profile(ident: bytes) -> DeviceProfile:
    return DeviceProfile.canonical(
        ident,
        hashlib.sha256(b"fw:" + ident).digest(),
        hashlib.sha256(b"os:" + ident).digest(),
        [("sensord", "1.2"), ("sshd", "9.0")],
        ["slot0"], ["slot1"], ["telnet"])


class Rig:
    """Authority plus helpers to mint registered children, no network."""

    def __init__(self, params, seed=0, freshness_window_ms=2000):
        self.master = random.Random(seed)
        self.clock = ManualClock()
        self.store = AffinityStore()
        self.authority, self.announcement = authority.setup(
            params, random.Random(self.master.getrandbits(64)),
            self.clock, self.store, freshness_window_ms)
        self.params = params

    def provision(self, ident: bytes):
        key = random.Random(self.master.getrandbits(64)).randbytes(32)
        profile = make_profile(ident)
        self.store.provision(profile, key)
        child = ChildState(ident, self.announcement, key,
                           random.Random(self.master.getrandbits(64)),
                           self.clock)
        return child, profile

    def register(self, ident: bytes):
        """Full registration including the confirmation round."""
        child, profile = self.provision(ident)
        self.clock.advance(5)
        resp = self.authority.register_child(
            child.request_registration(), profile)
        child.confirm_auth_key(resp, self.authority.handle_auth_request)
        return child


@pytest.fixture
def toy_rig(toy):
    return Rig(toy, seed=101)


@pytest.fixture
def prod_rig(prod):
    return Rig(prod, seed=202)
