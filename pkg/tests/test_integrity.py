import hashlib
import itertools

import pytest

from fogca import integrity
from fogca.errors import NonCanonicalProfile, UnknownDevice, UntrustedProvenance
from fogca.integrity import (
    AffinityStore,
    DeviceProfile,
    TrustState,
    apply_countermeasure,
    compute_ivv,
    perturb_profile,
    verify_ivv,
)

IVV_GOLDEN = "8819ae255296e501cdc75dc96f5eb412af73051b99dbbdd01a684fdf3032d3c1"


def profile(ident=b"dev"):
    return DeviceProfile.canonical(
        ident, hashlib.sha256(b"f").digest(), hashlib.sha256(b"o").digest(),
        [("app", "1.0")], ["s0"], ["s1"], ["svc"])


class TestProfile:
    def test_canonical_sorts_and_dedupes(self):
        p = DeviceProfile.canonical(
            b"dev", bytes(32), bytes(32),
            [("b", "2"), ("a", "1"), ("a", "1")],
            ["z", "a", "z"], [], [])
        assert p.software_list == (("a", "1"), ("b", "2"))
        assert p.used_slots == ("a", "z")

    def test_rejects_unsorted(self):
        with pytest.raises(NonCanonicalProfile):
            DeviceProfile(b"dev", bytes(32), bytes(32),
                          used_slots=("b", "a"))

    def test_rejects_duplicates(self):
        with pytest.raises(NonCanonicalProfile):
            DeviceProfile(b"dev", bytes(32), bytes(32),
                          used_slots=("a", "a"))

    def test_rejects_bad_digest_width(self):
        with pytest.raises(NonCanonicalProfile):
            DeviceProfile(b"dev", b"short", bytes(32))

    def test_serialization_roundtrip(self):
        p = profile()
        assert integrity.parse_profile(integrity.serialize_profile(p)) == p


class TestIvv:
    def test_golden(self):
        assert compute_ivv(profile()).hex() == IVV_GOLDEN

    def test_equal_profiles_equal_ivv(self):
        assert compute_ivv(profile()) == compute_ivv(profile())

    def test_version_bump_changes_ivv(self):
        bumped = perturb_profile(profile(), "software_list")
        assert compute_ivv(bumped) != compute_ivv(profile())

    def test_reordered_input_same_ivv(self):
        a = DeviceProfile.canonical(b"dev", bytes(32), bytes(32),
                                    [("x", "1"), ("a", "2")], ["b", "a"], [], [])
        b = DeviceProfile.canonical(b"dev", bytes(32), bytes(32),
                                    [("a", "2"), ("x", "1")], ["a", "b"], [], [])
        assert compute_ivv(a) == compute_ivv(b)

    def test_verify_match(self):
        assert verify_ivv(profile(), profile()).match

    def test_verify_names_differing_field(self):
        verdict = verify_ivv(profile(), perturb_profile(profile(),
                                                        "firmware_digest"))
        assert not verdict.match
        assert verdict.diff == ("firmware_digest",)

    def test_every_single_field_mutation_flips_verdict(self):
        base = profile()
        for name in integrity.PROFILE_FIELDS:
            verdict = verify_ivv(base, perturb_profile(base, name))
            assert not verdict.match and name in verdict.diff

    def test_collision_free_at_test_scale(self):
        seen = set()
        for fields in itertools.product(range(3), repeat=3):
            p = DeviceProfile.canonical(
                b"dev", bytes(32), bytes(32),
                [("app", str(fields[0]))], [f"s{fields[1]}"],
                [f"u{fields[2]}"], [])
            seen.add(compute_ivv(p))
        assert len(seen) == 27


class TestCountermeasures:
    def test_mismatch_quarantines_by_default(self):
        bad = integrity.IvvVerdict(False, ("os_digest",))
        assert apply_countermeasure(TrustState.TRUSTED, bad) == \
            (TrustState.QUARANTINED, "quarantine")

    def test_reset_policy(self):
        bad = integrity.IvvVerdict(False, ())
        assert apply_countermeasure(TrustState.TRUSTED, bad, "reset") == \
            (TrustState.RESET_PENDING, "reset")

    def test_second_mismatch_after_reset_blacklists(self):
        bad = integrity.IvvVerdict(False, ())
        for policy in ("quarantine", "reset"):
            assert apply_countermeasure(TrustState.RESET_PENDING, bad,
                                        policy) == \
                (TrustState.BLACKLISTED, "blacklist")

    def test_match_keeps_or_grants_trust(self):
        good = integrity.IvvVerdict(True)
        assert apply_countermeasure(TrustState.TRUSTED, good) == \
            (TrustState.TRUSTED, None)
        assert apply_countermeasure(TrustState.UNTRUSTED, good) == \
            (TrustState.TRUSTED, None)
        assert apply_countermeasure(TrustState.RESET_PENDING, good) == \
            (TrustState.TRUSTED, None)

    def test_quarantine_is_sticky(self):
        good = integrity.IvvVerdict(True)
        assert apply_countermeasure(TrustState.QUARANTINED, good) == \
            (TrustState.QUARANTINED, None)

    def test_blacklist_is_terminal(self):
        for verdict in (integrity.IvvVerdict(True), integrity.IvvVerdict(False)):
            assert apply_countermeasure(TrustState.BLACKLISTED, verdict) == \
                (TrustState.BLACKLISTED, None)

    def test_full_transition_enumeration(self):
        # every (state, verdict, policy) lands in a defined state
        for state in TrustState:
            for match in (True, False):
                for policy in ("quarantine", "reset"):
                    new, _ = apply_countermeasure(
                        state, integrity.IvvVerdict(match), policy)
                    assert isinstance(new, TrustState)

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            apply_countermeasure(TrustState.TRUSTED,
                                 integrity.IvvVerdict(False), "nuke")


class TestAffinityStore:
    def test_verify_updates_trust_and_emits_event(self):
        store = AffinityStore()
        store.provision(profile(), b"\x01" * 32)
        verdict = store.verify(b"dev", perturb_profile(profile(), "os_digest"),
                               now_ms=44)
        assert not verdict.match
        assert store.get(b"dev").trust is TrustState.QUARANTINED
        assert store.events and store.events[-1].action == "quarantine"
        assert store.events[-1].at_ms == 44

    def test_unknown_device(self):
        store = AffinityStore()
        with pytest.raises(UnknownDevice):
            store.verify(b"ghost", profile())

    def test_update_profile_parent_only(self):
        store = AffinityStore()
        store.provision(profile(), b"\x01" * 32)
        new = perturb_profile(profile(), "software_list")
        with pytest.raises(UntrustedProvenance):
            store.update_profile(b"dev", new, provenance="child")
        store.update_profile(b"dev", new, provenance="parent")
        assert store.verify(b"dev", new).match

    def test_update_then_stale_report_mismatches(self):
        store = AffinityStore()
        store.provision(profile(), b"\x01" * 32)
        new = perturb_profile(profile(), "software_list")
        store.update_profile(b"dev", new, provenance="parent")
        verdict = store.verify(b"dev", profile())  # device not updated yet
        assert not verdict.match and "software_list" in verdict.diff

    def test_persistence_roundtrip(self, tmp_path):
        store = AffinityStore()
        store.provision(profile(b"a"), b"\x01" * 32)
        store.provision(profile(b"b"), b"\x02" * 32)
        store.set_trust(b"b", TrustState.QUARANTINED, now_ms=9)
        path = tmp_path / "affinity.txt"
        store.save(path)
        loaded = AffinityStore.load(path)
        assert loaded.get(b"a").profile == profile(b"a")
        assert loaded.get(b"b").trust is TrustState.QUARANTINED
        assert loaded.get(b"b").since_ms == 9
        assert loaded.get(b"a").channel_key == b"\x01" * 32
