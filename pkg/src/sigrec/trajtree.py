"""Prefix-sharing trees over trajectory signatures, with lossy compression.

Every trajectory contributes one node per point: the node at timestep t
holds the signature of the prefix ending at point t.  Two trajectories
share nodes exactly as far as their state prefixes are identical, so the
node for timestep 0 sits below a sentinel root (trivial signature,
timestep -1) that all trajectories share unconditionally.

Compression is two-phase and order matters: `merge` first unifies sibling
nodes whose signatures lie within a squared-distance threshold, then
`prune` deletes nodes that barely differ from their parent.  Surviving
nodes keep their original timesteps; downstream scoring relies on that
bookkeeping to index branches by observation time after compression.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from sigrec.signature import PathSignature, SignatureStream, as_trajectory

__all__ = [
    "TreeNode",
    "TrajectoryTree",
    "Branch",
    "TreeDiagnostics",
    "TreeFormatError",
    "build_tree",
    "merge",
    "prune",
    "branches",
    "validate",
    "squared_distance",
    "save_tree",
    "load_tree",
]

ROOT_TIMESTEP = -1


class TreeFormatError(ValueError):
    """Raised when a serialized tree file cannot be parsed."""


def squared_distance(a: PathSignature, b: PathSignature) -> float:
    """Squared Euclidean distance between two signature term vectors."""
    return float(np.sum((a.terms - b.terms) ** 2))


@dataclass(eq=False)
class TreeNode:
    value: PathSignature
    timestep: int
    children: list["TreeNode"] = field(default_factory=list)
    goal_labels: set = field(default_factory=set)
    terminal_goals: set = field(default_factory=set)
    # state that ends the prefix this node stands for; build-time only,
    # compression invalidates it
    last_state: np.ndarray | None = None

    def is_leaf(self) -> bool:
        return not self.children


@dataclass(eq=False)
class TrajectoryTree:
    root: TreeNode
    dimension: int
    depth: int
    goal_ids: tuple
    goal_states: dict = field(default_factory=dict)
    initial_state: np.ndarray | None = None

    def iter_nodes(self):
        """Preorder walk including the root."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    @property
    def node_count(self) -> int:
        return sum(1 for _ in self.iter_nodes())

    @property
    def leaf_count(self) -> int:
        return sum(1 for n in self.iter_nodes() if n.is_leaf())

    @property
    def height(self) -> int:
        """Longest root-to-leaf path in edges."""

        def deep(node):
            return 1 + max((deep(c) for c in node.children), default=-1)

        return deep(self.root)

    def width_per_level(self) -> dict[int, int]:
        """Node count per original timestep, root excluded."""
        widths: dict[int, int] = {}
        for n in self.iter_nodes():
            if n is not self.root:
                widths[n.timestep] = widths.get(n.timestep, 0) + 1
        return widths


def build_tree(trajectories, depth: int) -> TrajectoryTree:
    """Build an uncompressed tree from (points, goal) pairs.

    Parameters
    ----------
    trajectories : iterable of (array_like, goal)
        Each entry is an (n, d) trajectory and the goal it reaches.  All
        trajectories must share the dimension d.
    depth : int
        Signature truncation depth for node values.

    Nodes are shared exactly while state prefixes coincide; a fresh branch
    starts at the first differing state.  Goal labels accumulate on every
    node along a trajectory's chain, and the node where a trajectory ends
    records the goal as terminal.
    """
    items = [(as_trajectory(pts), goal) for pts, goal in trajectories]
    if not items:
        raise ValueError("build_tree needs at least one trajectory")
    dimension = items[0][0].shape[1]
    for pts, _ in items:
        if pts.shape[1] != dimension:
            raise ValueError(
                f"trajectories disagree in dimension: {pts.shape[1]} vs {dimension}"
            )

    goal_ids: list = []
    goal_states: dict = {}
    root = TreeNode(
        value=PathSignature.trivial(dimension, depth),
        timestep=ROOT_TIMESTEP,
    )
    for pts, goal in items:
        if goal not in goal_ids:
            goal_ids.append(goal)
            goal_states[goal] = pts[-1].copy()
        root.goal_labels.add(goal)
        stream = SignatureStream(dimension, depth)
        node = root
        for t, state in enumerate(pts):
            stream.extend(state)
            child = None
            for c in node.children:
                if c.last_state is not None and np.array_equal(c.last_state, state):
                    child = c
                    break
            if child is None:
                child = TreeNode(
                    value=stream.signature,
                    timestep=t,
                    last_state=state.copy(),
                )
                node.children.append(child)
            child.goal_labels.add(goal)
            node = child
        node.terminal_goals.add(goal)

    return TrajectoryTree(
        root=root,
        dimension=dimension,
        depth=depth,
        goal_ids=tuple(goal_ids),
        goal_states=goal_states,
        initial_state=items[0][0][0].copy(),
    )


def merge(tree: TrajectoryTree, eps_merge: float) -> TrajectoryTree:
    """Unify sibling nodes closer than `eps_merge` in squared distance.

    Scans each sibling list left to right, breadth-first from the root;
    when a pair merges, the rightmost node is deleted, its children are
    appended to the leftmost, the survivor's value becomes the element-wise
    mean, goal labels are unioned, and the scan restarts on the updated
    list.  Chained merges therefore compare against the running averaged
    value.  A threshold of 0 is an exact no-op.  Mutates and returns the
    tree.
    """
    if eps_merge < 0:
        raise ValueError(f"eps_merge must be non-negative, got {eps_merge}")
    queue = [tree.root]
    while queue:
        node = queue.pop(0)
        restart = True
        while restart:
            restart = False
            ch = node.children
            for z in range(len(ch)):
                for j in range(z + 1, len(ch)):
                    if squared_distance(ch[z].value, ch[j].value) < eps_merge:
                        survivor, removed = ch[z], ch[j]
                        survivor.value = PathSignature(
                            tree.dimension,
                            tree.depth,
                            (survivor.value.terms + removed.value.terms) / 2.0,
                        )
                        survivor.goal_labels |= removed.goal_labels
                        survivor.terminal_goals |= removed.terminal_goals
                        survivor.children.extend(removed.children)
                        survivor.last_state = None
                        del ch[j]
                        restart = True
                        break
                if restart:
                    break
        queue.extend(node.children)
    return tree


def prune(tree: TrajectoryTree, eps_prune: float) -> TrajectoryTree:
    """Delete nodes within `eps_prune` squared distance of their parent.

    Deleting a node hands its children and terminal goals to the parent;
    adopted children are re-examined against the same parent, so each
    sibling list reaches a fixpoint before recursing.  Run after `merge`,
    never before.  One guard: a node carrying terminal goals is never
    pruned into the root, so every goal keeps at least one proper node on
    its path.  A threshold of 0 is an exact no-op.  Mutates and returns
    the tree.
    """
    if eps_prune < 0:
        raise ValueError(f"eps_prune must be non-negative, got {eps_prune}")

    def prune_into(node: TreeNode, is_root: bool):
        i = 0
        while i < len(node.children):
            child = node.children[i]
            protected = is_root and child.terminal_goals
            if not protected and squared_distance(node.value, child.value) < eps_prune:
                node.terminal_goals |= child.terminal_goals
                node.goal_labels |= child.goal_labels
                node.children[i : i + 1] = child.children
            else:
                i += 1
        for child in node.children:
            prune_into(child, False)

    prune_into(tree.root, True)
    return tree


@dataclass(frozen=True)
class Branch:
    """One scoreable root-to-terminal chain of signature values."""

    goal: object
    values: np.ndarray  # (length, signature terms), row 0 is the root
    timesteps: np.ndarray  # original timesteps, first entry is -1

    def __len__(self):
        return self.values.shape[0]


def branches(tree: TrajectoryTree) -> list[Branch]:
    """All root-to-terminal chains, depth-first, one Branch per goal label.

    On an uncompressed tree from distinct trajectories this is exactly the
    root-to-leaf paths.  A node holding several terminal goals (possible
    after merging) yields one branch per goal, ordered by the tree's goal
    order.
    """
    order = {g: i for i, g in enumerate(tree.goal_ids)}
    out: list[Branch] = []

    def walk(node: TreeNode, chain: list[TreeNode]):
        chain.append(node)
        if node.terminal_goals:
            values = np.stack([n.value.terms for n in chain])
            timesteps = np.array([n.timestep for n in chain], dtype=np.int64)
            for goal in sorted(node.terminal_goals, key=lambda g: order.get(g, len(order))):
                out.append(Branch(goal=goal, values=values, timesteps=timesteps))
        for child in node.children:
            walk(child, chain)
        chain.pop()

    walk(tree.root, [])
    return out


@dataclass(frozen=True)
class TreeDiagnostics:
    node_count: int
    leaf_count: int
    height: int
    width_per_level: dict
    goal_count: int
    multi_goal_leaves: int
    missing_goals: tuple
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(tree: TrajectoryTree, goals=None) -> TreeDiagnostics:
    """Structural statistics plus threshold-violation checks.

    Flags: fewer leaves than goals (over-compression), leaves carrying more
    than one goal label (merge unified different goals), and goals with no
    terminal node at all.
    """
    goals = tuple(goals) if goals is not None else tree.goal_ids
    leaves = [n for n in tree.iter_nodes() if n.is_leaf()]
    covered = set()
    for n in tree.iter_nodes():
        covered |= n.terminal_goals
    multi = sum(1 for n in leaves if len(n.terminal_goals) > 1)
    missing = tuple(g for g in goals if g not in covered)

    violations = []
    if len(leaves) < len(goals):
        violations.append(
            f"leaf count {len(leaves)} below goal count {len(goals)}; "
            "compression thresholds are too aggressive"
        )
    if multi:
        violations.append(f"{multi} leaf(s) carry multiple goal labels")
    if missing:
        violations.append("goals without any terminal node: " + ", ".join(map(str, missing)))

    return TreeDiagnostics(
        node_count=tree.node_count,
        leaf_count=len(leaves),
        height=tree.height,
        width_per_level=tree.width_per_level(),
        goal_count=len(goals),
        multi_goal_leaves=multi,
        missing_goals=missing,
        violations=tuple(violations),
    )


FORMAT_TAG = "sigtree"
FORMAT_VERSION = 1


def _goal_token(goal) -> str:
    token = str(goal)
    if not token or any(c.isspace() for c in token) or "," in token:
        raise ValueError(
            f"goal id {goal!r} cannot be serialized: ids must be non-empty "
            "and free of whitespace and commas"
        )
    return token


def save_tree(tree: TrajectoryTree, path) -> None:
    """Write the versioned flat node table (see docs/FORMATS.md)."""
    lines = [f"{FORMAT_TAG} {FORMAT_VERSION}"]
    lines.append(f"dimension {tree.dimension}")
    lines.append(f"depth {tree.depth}")
    if tree.initial_state is not None:
        lines.append("initial " + " ".join(repr(float(v)) for v in tree.initial_state))
    for goal in tree.goal_ids:
        token = _goal_token(goal)
        state = tree.goal_states.get(goal)
        if state is None:
            lines.append(f"goal {token}")
        else:
            lines.append(f"goal {token} " + " ".join(repr(float(v)) for v in state))

    nodes = list(tree.iter_nodes())
    index = {id(n): i for i, n in enumerate(nodes)}
    parent_of = {id(tree.root): -1}
    for n in nodes:
        for c in n.children:
            parent_of[id(c)] = index[id(n)]
    lines.append(f"nodes {len(nodes)}")
    for n in nodes:
        terminals = ",".join(_goal_token(g) for g in sorted(n.terminal_goals, key=str)) or "-"
        terms = ",".join(repr(float(v)) for v in n.value.terms)
        lines.append(f"{parent_of[id(n)]} {n.timestep} {terminals} {terms}")

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_tree(path) -> TrajectoryTree:
    """Read a tree written by `save_tree`; inverse up to goal-label recompute."""
    with open(path) as fh:
        raw = fh.readlines()
    lines = [(no + 1, ln.strip()) for no, ln in enumerate(raw)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise TreeFormatError(f"{path}: empty tree file")

    def fail(no, msg):
        raise TreeFormatError(f"{path}: line {no}: {msg}")

    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != FORMAT_TAG:
        fail(no, f"expected '{FORMAT_TAG} <version>' header, got {header!r}")
    if int(parts[1]) != FORMAT_VERSION:
        fail(no, f"unsupported version {parts[1]}")

    dimension = depth = None
    initial = None
    goal_ids: list = []
    goal_states: dict = {}
    cursor = 1
    node_total = None
    while cursor < len(lines):
        no, ln = lines[cursor]
        key = ln.split()[0]
        if key == "dimension":
            dimension = int(ln.split()[1])
        elif key == "depth":
            depth = int(ln.split()[1])
        elif key == "initial":
            initial = np.array([float(v) for v in ln.split()[1:]])
        elif key == "goal":
            toks = ln.split()
            if len(toks) < 2:
                fail(no, "goal line needs an id")
            goal_ids.append(toks[1])
            if len(toks) > 2:
                goal_states[toks[1]] = np.array([float(v) for v in toks[2:]])
        elif key == "nodes":
            node_total = int(ln.split()[1])
            cursor += 1
            break
        else:
            fail(no, f"unknown header line {ln!r}")
        cursor += 1
    if dimension is None or depth is None:
        raise TreeFormatError(f"{path}: missing dimension/depth header")
    if node_total is None:
        raise TreeFormatError(f"{path}: missing 'nodes <count>' line")

    node_lines = lines[cursor:]
    if len(node_lines) != node_total:
        raise TreeFormatError(
            f"{path}: declared {node_total} nodes but found {len(node_lines)} records"
        )

    nodes: list[TreeNode] = []
    root = None
    for no, ln in node_lines:
        toks = ln.split()
        if len(toks) != 4:
            fail(no, f"node record needs 4 fields, got {len(toks)}")
        parent, timestep, terminals, terms_tok = toks
        try:
            parent = int(parent)
            timestep = int(timestep)
            terms = np.array([float(v) for v in terms_tok.split(",")])
        except ValueError as exc:
            fail(no, str(exc))
        try:
            value = PathSignature(dimension, depth, terms)
        except ValueError as exc:
            fail(no, str(exc))
        node = TreeNode(value=value, timestep=timestep)
        if terminals != "-":
            node.terminal_goals = set(terminals.split(","))
        if parent == -1:
            if root is not None:
                fail(no, "second root record")
            root = node
        else:
            if not 0 <= parent < len(nodes):
                fail(no, f"parent index {parent} out of range")
            nodes[parent].children.append(node)
        nodes.append(node)
    if root is None:
        raise TreeFormatError(f"{path}: no root record")

    def relabel(node: TreeNode) -> set:
        labels = set(node.terminal_goals)
        for c in node.children:
            labels |= relabel(c)
        node.goal_labels = labels
        return labels

    covered = relabel(root)
    root.goal_labels |= set(goal_ids)
    if not goal_ids:
        warnings.warn(f"{path}: tree file lists no goals; using terminal labels")
        goal_ids = sorted(covered, key=str)

    return TrajectoryTree(
        root=root,
        dimension=dimension,
        depth=depth,
        goal_ids=tuple(goal_ids),
        goal_states=goal_states,
        initial_state=initial,
    )
