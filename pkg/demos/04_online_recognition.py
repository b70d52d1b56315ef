"""Online goal recognition: streaming observations into a posterior.

The engine keeps a running prefix signature of everything observed so
far, scores every tree branch against it, and normalizes per-goal scores
(weighted by priors) into a posterior. Timestep gaps are filled by
linear interpolation; observing a goal state ends the episode.
"""
import numpy as np

from sigrec import (
    EngineConfig,
    EpisodeTerminated,
    Recognizer,
    build_tree,
    sample_k_trajectories,
    GridMap,
    SampleRequest,
)

# a small open arena with two goals in opposite corners
grid = GridMap.empty(12, 12)
start = (5, 0)
goal_cells = {"west": (0, 11), "east": (11, 11)}

library = []
for goal, cell in goal_cells.items():
    request = SampleRequest(start=start, goal_cell=cell, k=3)
    for traj in sample_k_trajectories(grid, request, rng=17):
        library.append((traj, goal))
tree = build_tree(library, depth=2)
print(f"library: {len(library)} trajectories, tree nodes: {tree.node_count}")

# replay the shortest 'west' trajectory and watch the posterior move
replay = library[0][0]
engine = Recognizer(tree, EngineConfig(mode="plain"))
print("\nstreaming the west-bound replay:")
for t in range(len(replay) - 1):  # the last point is the goal itself
    post = engine.observe(t, replay[t])
    bar = "#" * int(round(20 * post["west"]))
    print(f"  t={t:2d}  p(west)={post['west']:.3f} {bar}")

# the goal state itself terminates the episode
try:
    engine.observe(len(replay) - 1, replay[-1])
except EpisodeTerminated as stop:
    print(f"episode ended: reached goal {stop.goal!r}")

# gaps are interpolated: skip every second observation
engine = Recognizer(tree, EngineConfig(mode="plain"))
post = None
for t in range(0, len(replay) - 1, 2):
    post = engine.observe(t, replay[t])
print(f"\nwith every second observation dropped, p(west)={post['west']:.3f}")
print(f"observations received: {len(engine.observations.received)}, "
      f"filled timeline: {len(engine.observations.filled)}")

# a pace-distorted replay (double speed) confuses synchronized lookups;
# warped scoring recovers
fast_replay = replay[::2]
for mode in ("plain", "dtw"):
    engine = Recognizer(tree, EngineConfig(mode=mode, dtw_radius=3))
    post = None
    for t in range(len(fast_replay) - 1):
        post = engine.observe(t, fast_replay[t])
    print(f"double-speed replay, {mode:5s} mode: p(west)={post['west']:.3f}")
