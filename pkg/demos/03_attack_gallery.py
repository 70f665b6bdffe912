"""Run every adversary scenario a few times and tabulate the verdicts.

The adversary owns the link between device and gateway: it can observe,
replay, duplicate, and rewrite traffic, but it holds no keys.  Each
scenario reports whether the attack was blocked and what the honest
parties concluded.
"""

from fogca import scenarios

SEEDS = range(5)

print(f"{'scenario':<14} {'seed':>4}  {'blocked':<8} {'honest run':<11} verdicts")
print("-" * 76)
for name in scenarios.SCENARIOS:
    for seed in SEEDS:
        for report in scenarios.run_scenario(name, seed):
            interesting = [v for v in report.observed
                           if v not in ("key-agreement", "peer-established")]
            print(f"{report.name:<14} {seed:>4}  "
                  f"{str(report.blocked):<8} "
                  f"{('completed' if report.completed else 'aborted'):<11} "
                  f"{', '.join(interesting) or '(none)'}")

print()
report = scenarios.run_passive(0)
print("passive adversary capture,", report.notes)
for line in report.transcript_jsonl.splitlines()[:4]:
    print(" ", line[:100], "...")
print("  ...")
print("secrets on the wire:", "none" if report.leak_free else "LEAKED")
