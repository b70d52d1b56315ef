"""Shared constructions used across test modules."""
from __future__ import annotations

import numpy as np


def supplement_family(include_bump: bool = True):
    """Four hand-picked trajectories over t = 1..4 with tight prefix overlap.

    flat:    (t, 2)                       constant second coordinate
    ramp:    (t, max(t, 2))               identical to flat for two steps
    riser:   (t, min(2, t-1))             same endpoint, different start
    bump:    (t, 0.1*exp(-(t-2)^2/(2*0.158^2)) + 2)
                                          near-flat with a bump at t = 2

    Returns (trajectory, goal) pairs; flat, riser and bump end at (4, 2) and
    share a goal, ramp ends at (4, 4).
    """
    t = np.arange(1.0, 5.0)
    flat = np.column_stack([t, np.full(4, 2.0)])
    ramp = np.column_stack([t, np.maximum(t, 2.0)])
    riser = np.column_stack([t, np.minimum(2.0, t - 1.0)])
    out = [(flat, "gA"), (ramp, "gB"), (riser, "gA")]
    if include_bump:
        bump = np.column_stack([t, 0.1 * np.exp(-((t - 2.0) ** 2) / (2 * 0.158**2)) + 2.0])
        out.append((bump, "gA"))
    return out


def tree_equal(a, b) -> bool:
    """Structural equality: shape, values, timesteps, labels, child order."""

    def node_eq(x, y):
        return (
            x.timestep == y.timestep
            and np.array_equal(x.value.terms, y.value.terms)
            and x.goal_labels == y.goal_labels
            and x.terminal_goals == y.terminal_goals
            and len(x.children) == len(y.children)
            and all(node_eq(p, q) for p, q in zip(x.children, y.children))
        )

    return node_eq(a.root, b.root)


def random_integer_trajectories(rng, count, goals, length=6, dim=2):
    """Distinct forward-moving integer trajectories from a common origin."""
    seen = set()
    out = []
    while len(out) < count:
        steps = rng.integers(0, 3, size=(length - 1, dim)).astype(float)
        steps[:, 0] += 1.0
        pts = np.vstack([np.zeros(dim), np.cumsum(steps, axis=0)])
        key = pts.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out.append((pts, goals[len(out) % len(goals)]))
    return out
