"""Trajectory trees: shared prefixes, merging, pruning, serialization.

Trajectories toward different goals often start identically. The tree
stores one node per trajectory step holding the prefix signature up to
that step; trajectories with equal state prefixes share those nodes.
Merging unifies near-identical sibling nodes, pruning drops nodes that
barely differ from their parent, and both keep every goal reachable.
"""
import tempfile
from pathlib import Path

import numpy as np

from sigrec import build_tree, branches, load_tree, merge, prune, save_tree, validate

# four hand-made trajectories on a 2-D plane, two goals
flat = np.array([[t, 2.0] for t in range(1, 5)], dtype=float)          # -> gA
ramp = np.array([[t, max(t, 2.0)] for t in range(1, 5)], dtype=float)  # -> gB
riser = np.array([[t, min(2.0, t - 1.0)] for t in range(1, 5)], dtype=float)  # -> gA
library = [(flat, "gA"), (ramp, "gB"), (riser, "gA")]

tree = build_tree(library, depth=2)
print("built tree:")
print("  nodes:", tree.node_count, " leaves:", tree.leaf_count,
      " height:", tree.height)
print("  flat and ramp share their first two states, so the root has",
      len(tree.root.children), "children for 3 trajectories")

print("branches (one per goal-terminated chain):")
for b in branches(tree):
    print(f"  goal {b.goal}: {len(b)} nodes, timesteps {[int(t) for t in b.timesteps]}")

# compression: merge unifies siblings closer than the threshold (squared
# distance between signature vectors), prune removes children that stay
# within the threshold of their parent
merged = build_tree(library, depth=2)
merge(merged, 0.3)
prune(merged, 0.05)
print("after merge(0.3) + prune(0.05):",
      merged.node_count, "nodes (was", tree.node_count, ")")

diag = validate(merged)
print("health check ok:", diag.ok, " width per level:", diag.width_per_level)

# an absurd threshold collapses the two goals onto one chain and the
# validator says so
broken = build_tree(library, depth=2)
merge(broken, 1e6)
for violation in validate(broken).violations:
    print("violation:", violation)

# ASCII round trip preserves every float bit
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "tree.txt"
    save_tree(merged, path)
    again = load_tree(path)
    print("round trip preserves node count:", again.node_count == merged.node_count)
    print("first lines of the file:")
    for line in path.read_text().splitlines()[:5]:
        print("   ", line)
