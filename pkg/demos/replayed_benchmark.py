"""Run the bundled six-instance benchmark entirely from replay fixtures.

No network, no API keys: every request the run makes was recorded into
the package's fixtures, so this replays byte-for-byte on any machine.
"""

from meeseeks import ReplayGateway, ReplayMode, ReplayStore, build_reports
from meeseeks.demo import bundled_demo_dir, demo_dataset, run_demo, DEMO_MAX_TURNS

store = ReplayStore(bundled_demo_dir() / "replay")
gateway = ReplayGateway(store, ReplayMode.REPLAY_STRICT)

result = run_demo(gateway)
transcripts = result.for_endpoint("demo-target")

print("session outcomes")
print("-" * 60)
for instance_id, t in sorted(transcripts.items()):
    turn = f"turn {t.passed_turn}" if t.passed_turn else f"{len(t.turns)} turns"
    print(f"  {instance_id:<18} {t.status.value:<17} ({turn})")

instances = demo_dataset()
reports = build_reports(instances, transcripts, DEMO_MAX_TURNS)

print()
print("cumulative scores by round")
print("-" * 60)
print(f"  {'round':>5}  {'utility':>8}  {'meeseeks':>8}")
for report in reports:
    print(f"  {report.round:>5}  {report.utility_score:>8.3f}  {report.meeseeks_score:>8.3f}")

# Drill into one capability dimension of the final round.  Serialized
# reports list children in taxonomy order, so go through to_dict().
final = reports[-1]
node = final.to_dict()["capability_stats"]["Granular Content Validation"]
print()
print(f"Granular Content Validation: {node['correct']}/{node['total']} after round {final.round}")
for name, child in node["children"].items():
    print(f"    {name:<28} {child['correct']}/{child['total']}")
