"""Benchmarking: metrics over sampled problems and a threshold sweep.

A problem bundles a trajectory library with ground-truth episodes. The
harness replays every episode, pools per-step predictions into ppv/spr,
reads accuracy at observation-fraction checkpoints, and times the
offline (sampling + tree building) and online (per-observation) stages.
"""
from sigrec import ExperimentSpec, GridMap, emit_report, grid_search, run_experiment
from sigrec.bench import sampled_problem

grid = GridMap.empty(16, 16)
goal_cells = {"nw": (0, 15), "ne": (15, 15), "mid": (8, 15)}
problems = [
    sampled_problem(f"arena{i}", grid, start=(8, 0), goal_cells=goal_cells,
                    k=4, rng=100 + i)
    for i in range(3)
]
print(f"{len(problems)} problems, {len(goal_cells)} goals each, "
      f"pc per problem = {problems[0].sampler_calls}")

spec = ExperimentSpec(name="baseline", depth=2)
report = run_experiment(problems, spec)
print()
print(emit_report(report, fmt="table"))

print("accuracy per observation fraction:")
for f in sorted(report.accuracy_by_fraction):
    print(f"  {f:.3f}: {report.accuracy_by_fraction[f]:6.2f}%")

# sweep compression thresholds; sampling is reused, trees are rebuilt
result = grid_search(
    {4: problems},
    ExperimentSpec(name="sweep", depth=2),
    merge_values=[0.0, 0.2, 2.0],
    prune_values=[0.0, 0.2, 2.0],
)
print("grid cells (csv):")
print(result.to_csv())
best = result.best_parameters
print(f"best cell: merge={best['eps_merge']} prune={best['eps_prune']} "
      f"k={best['k']} (ppv {result.best_report.ppv:.2f}%)")
