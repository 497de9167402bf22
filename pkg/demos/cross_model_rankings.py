"""Do extra feedback rounds reshuffle the leaderboard?

The package bundles 20-round utility series for 17 public chat models.
Two questions worth asking of such a population: does the spread between
models shrink as everyone gets feedback, and does the round-1 ranking
survive to round 20?  Spearman against round 1 answers the second —
values near 1 mean the single-turn ranking already tells the story.
"""

from meeseeks import cross_model_analysis, load_utility_reference, window_average_series

reference = load_utility_reference()
utilities = {name: entry["per_turn"] for name, entry in reference["models"].items()}

analysis = cross_model_analysis(utilities)
print(f"{analysis.rounds} rounds x {len(analysis.models)} models")

print("\nround  stdev   pearson  spearman   (vs round 1)")
for i in (0, 4, 9, 14, 19):
    print(
        f"{i + 1:>5}  {analysis.stdev_by_round[i]:.4f}"
        f"  {analysis.pearson_vs_first_round[i]:>7.4f}"
        f"  {analysis.spearman_vs_first_round[i]:>8.4f}"
    )

label = "  ".join(f"{lo}-{hi}" for lo, hi in analysis.windows)
print(f"\nwindow averages ({label}), best five by final window:")
ranked = sorted(analysis.window_averages.items(), key=lambda kv: -kv[1][-1])
for name, averages in ranked[:5]:
    cells = "  ".join(f"{v:.3f}" for v in averages)
    print(f"  {name:<26} {cells}")

# The bundled numbers also carry published window averages; the series
# should reproduce them to the rounding of the source table.
worst = 0.0
for name, entry in reference["models"].items():
    recomputed = window_average_series(entry["per_turn"])
    for ours, published in zip(recomputed, entry["published_window_averages"]):
        worst = max(worst, abs(ours - published))
print(f"\nlargest gap to the published window table: {worst:.2e}")
