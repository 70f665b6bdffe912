"""Command-line front end: thin shells over the library.

Exit codes: 0 success, 1 protocol/verdict failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import replace

from . import authority, curve, experiments, scenarios, wire
from .child import ChildState
from .crypto import ManualClock
from .errors import FogcaError
from .integrity import AffinityStore, compute_ivv, verify_ivv


def _curve_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--curve", choices=("toy17", "prod256"),
                        default="toy17")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogca",
        description="Fog-hosted CA authentication suite: handshakes, "
                    "attack scenarios, integrity checks, placement study.")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("setup", help="generate a CA and print its announcement")
    _curve_arg(p)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("register", help="register one child and confirm its key")
    _curve_arg(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--id", default="child-01")

    p = sub.add_parser("handshake",
                       help="register K children and run mutual authentication")
    _curve_arg(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--nodes", type=int, default=3)

    p = sub.add_parser("peer", help="peer key exchange relayed by the authority")
    _curve_arg(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--from", dest="from_id", default="child-a")
    p.add_argument("--to", dest="to_id", default="child-b")

    p = sub.add_parser("attack", help="run a seeded adversary scenario")
    p.add_argument("--scenario", choices=scenarios.SCENARIOS, required=True)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("ivv", help="compare a device report against a baseline")
    p.add_argument("--profile", required=True,
                   help="affinity baseline file (one device per line)")
    p.add_argument("--report", required=True,
                   help="reported profile file (same format)")

    p = sub.add_parser("experiment", help="placement study run, CSV output")
    p.add_argument("--setting", choices=sorted(experiments.SETTING_FRACTIONS),
                   required=True)
    p.add_argument("--nodes", type=int, default=40)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)

    return parser


def _mint_children(params, seed: int, idents: list[bytes]):
    """Authority plus registered-and-confirmed children, library-only."""
    master = random.Random(seed)
    clock = ManualClock()
    store = AffinityStore()
    state, announcement = authority.setup(
        params, random.Random(master.getrandbits(64)), clock, store)
    children = {}
    for ident in idents:
        channel_key = random.Random(master.getrandbits(64)).randbytes(32)
        profile = scenarios.device_profile(ident)
        store.provision(profile, channel_key)
        child = ChildState(ident, announcement, channel_key,
                           random.Random(master.getrandbits(64)), clock)
        clock.advance(7)
        resp = state.register_child(child.request_registration(), profile)
        child.confirm_auth_key(resp, state.handle_auth_request)
        children[ident] = child
    return state, announcement, children, clock


def cmd_setup(args) -> int:
    params = curve.load_preset(args.curve)
    state, announcement = authority.setup(params, random.Random(args.seed))
    print(wire.encode(announcement).hex())
    return 0


def cmd_register(args) -> int:
    params = curve.load_preset(args.curve)
    ident = args.id.encode()
    state, _, children, _ = _mint_children(params, args.seed, [ident])
    child = children[ident]
    same = state.sessions[ident][1] == child.ca_session[1]
    print(f"registered {args.id}: auth key installed, "
          f"confirmation key-agreement: {'OK' if same else 'MISMATCH'}")
    return 0 if same else 1


def cmd_handshake(args) -> int:
    params = curve.load_preset(args.curve)
    idents = [f"child-{i:02d}".encode() for i in range(args.nodes)]
    state, _, children, clock = _mint_children(params, args.seed, idents)
    failures = 0
    for ident, child in children.items():
        clock.advance(11)
        resp = state.handle_auth_request(child.auth_init())
        key = child.auth_finish(resp)
        ok = state.sessions[ident][1] == key
        failures += 0 if ok else 1
        print(f"{ident.decode()}: key-agreement: {'OK' if ok else 'FAILED'}")
    return 0 if failures == 0 else 1


def cmd_peer(args) -> int:
    params = curve.load_preset(args.curve)
    a, b = args.from_id.encode(), args.to_id.encode()
    state, _, children, _ = _mint_children(params, args.seed, [a, b])
    target, relay = state.relay_peer_request(a, children[a].peer_init(b))
    initiator, challenge = children[target].peer_respond(relay)
    peer_id, proof = children[a].peer_accept(challenge)
    children[b].peer_verify(proof, initiator)
    same = children[a].peer_sessions[b] == children[b].peer_sessions[a]
    print(f"peer session {args.from_id} <-> {args.to_id}: "
          f"{'established, keys equal' if same else 'KEY MISMATCH'}")
    return 0 if same else 1


def cmd_attack(args) -> int:
    reports = scenarios.run_scenario(args.scenario, args.seed)
    ok = True
    for report in reports:
        if report.name == "passive":
            verdict = ("protocol completed, no secrets on the wire"
                       if report.blocked and report.completed else "LEAKED")
            ok &= report.blocked and report.completed
            print(f"{report.name}: {verdict} ({report.notes})")
        else:
            shown = [v for v in report.observed
                     if v not in ("key-agreement", "peer-established")]
            ok &= report.blocked
            print(f"{report.name}: {shown[0] if shown else 'NOT BLOCKED'}"
                  f" -- attack {'blocked' if report.blocked else 'SUCCEEDED'}")
        # adversary transcript: one captured message per line, hex
        for line in report.transcript_jsonl.splitlines():
            entry = json.loads(line)
            print(f"  {entry['action']} {entry['payload']}")
    return 0 if ok else 1


def cmd_ivv(args) -> int:
    baseline_store = AffinityStore.load(args.profile)
    report_store = AffinityStore.load(args.report)
    failures = 0
    for device_id, rec in sorted(report_store.records.items()):
        try:
            base = baseline_store.get(device_id)
        except FogcaError:
            print(f"{device_id.decode(errors='replace')}: unknown device")
            failures += 1
            continue
        verdict = verify_ivv(base.profile, rec.profile)
        if verdict.match:
            print(f"{device_id.decode(errors='replace')}: match "
                  f"(ivv {compute_ivv(rec.profile).hex()[:16]})")
        else:
            failures += 1
            print(f"{device_id.decode(errors='replace')}: MISMATCH "
                  f"in {', '.join(verdict.diff)}")
    return 0 if failures == 0 else 1


def cmd_experiment(args) -> int:
    setting = experiments.placement(args.setting)
    workload = replace(experiments.DEFAULT_WORKLOAD, node_count=args.nodes)
    stats = experiments.run_experiment(setting, workload, args.seed)
    experiments.export_csv([(setting.name, args.nodes, stats)], args.out)
    print(f"{setting.name} nodes={args.nodes}: "
          f"reg mean {stats.registration.mean_ms:.1f} ms, "
          f"auth mean {stats.auth.mean_ms:.1f} ms, "
          f"retransmits {stats.retransmission_count} -> {args.out}")
    return 0


COMMANDS = {
    "setup": cmd_setup,
    "register": cmd_register,
    "handshake": cmd_handshake,
    "peer": cmd_peer,
    "attack": cmd_attack,
    "ivv": cmd_ivv,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except FogcaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
