"""Online goal posterior over the branches of a trajectory tree.

Each incoming observation extends a running prefix signature; every tree
branch is scored by how close it stays to that signature, scores are
aggregated per goal, and a prior-weighted normalization yields the
posterior.  Two scoring modes:

    plain   compare the latest prefix signature against the branch node at
            the same original timestep (clamped to the last node when the
            branch is shorter or was pruned); assumes observations arrive
            synchronized with the stored trajectories.
    dtw     warp the whole prefix-signature sequence onto the branch and
            reduce the aligned squared distances, keeping one pair per
            observation index (its first occurrence); tolerant of pace
            differences and interpolation artifacts.

Either way a branch at squared distance s scores 1 - exp(-1/s), which is
1 at s = 0 and decays toward 0 as the branch drifts away.

Missing integer timesteps are filled by linear interpolation before the
signature stream consumes them, so gappy observation sequences and dense
ones share one code path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from sigrec.dtw import dtw_fast, first_occurrence_map
from sigrec.signature import SignatureStream
from sigrec.trajtree import Branch, TrajectoryTree, branches

__all__ = [
    "EngineConfig",
    "EpisodeTerminated",
    "GoalPosterior",
    "ObservationLog",
    "Recognizer",
    "aggregate",
    "interpolate_missing",
    "normalize",
    "score_branch_dtw",
    "score_branch_plain",
]

MODES = ("plain", "dtw")
AGGREGATIONS = ("max", "incremental_mean")
REDUCTIONS = ("mean", "sum")


class EpisodeTerminated(Exception):
    """An observation matched a goal state; the episode is over.

    Carries the matched goal and the posterior from the step before.
    """

    def __init__(self, goal, posterior=None):
        super().__init__(f"observation reached goal {goal!r}")
        self.goal = goal
        self.posterior = posterior


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for the online engine.

    depth None means "use the tree's depth"; an explicit value must agree
    with it.  `dimension_mask` selects which state coordinates participate
    (observations and goal states are masked on the way in; the tree is
    expected to have been built from equally masked trajectories).
    """

    depth: int | None = None
    mode: str = "plain"
    aggregation: str = "max"
    dtw_radius: int = 1
    dtw_reduction: str = "mean"
    priors: dict | None = None
    interpolation: str = "linear"
    tie_tolerance: float = 1e-9
    goal_tolerance: float = 1e-9
    dimension_mask: tuple | None = None

    def validated(self) -> "EngineConfig":
        if self.depth is not None and not 1 <= self.depth <= 6:
            raise ValueError(f"depth must be in 1..6, got {self.depth}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValueError(
                f"aggregation must be one of {AGGREGATIONS}, got {self.aggregation!r}"
            )
        if self.dtw_reduction not in REDUCTIONS:
            raise ValueError(
                f"dtw_reduction must be one of {REDUCTIONS}, got {self.dtw_reduction!r}"
            )
        if self.interpolation != "linear":
            raise ValueError(f"only linear interpolation is supported, got {self.interpolation!r}")
        if self.dtw_radius < 0:
            raise ValueError(f"dtw_radius must be non-negative, got {self.dtw_radius}")
        if self.tie_tolerance < 0 or self.goal_tolerance < 0:
            raise ValueError("tolerances must be non-negative")
        return self


@dataclass
class ObservationLog:
    """Received and gap-filled observations plus their prefix signatures."""

    dimension: int
    depth: int
    received: list = field(default_factory=list)  # (timestep, state) as given
    filled: list = field(default_factory=list)  # dense states, one per timestep
    prefix_terms: list = field(default_factory=list)  # flat signature per step
    last_t: int = -1
    stream: SignatureStream = field(init=False)

    def __post_init__(self):
        self.stream = SignatureStream(self.dimension, self.depth)

    def append_filled(self, state: np.ndarray):
        self.stream.extend(state)
        self.filled.append(state)
        self.prefix_terms.append(self.stream.terms)

    def __len__(self):
        return len(self.filled)


def _score_from_squared(sq: float) -> float:
    # exp underflows to 0 for tiny sq, giving exactly 1.0 at the limit
    if sq == 0.0:
        return 1.0
    return 1.0 - math.exp(-1.0 / sq)


def score_branch_plain(obs: ObservationLog, branch: Branch) -> float:
    """Likelihood of one branch at the current timestep, synchronized mode.

    The branch node is the one with the largest original timestep not
    exceeding the observation's; when pruning removed that node or the
    branch ended earlier, the lookup clamps to the nearest earlier node.
    """
    if not obs.prefix_terms:
        raise ValueError("no observations consumed yet")
    idx = int(np.searchsorted(branch.timesteps, obs.last_t, side="right")) - 1
    idx = max(idx, 0)
    diff = obs.prefix_terms[-1] - branch.values[idx]
    return _score_from_squared(float(np.dot(diff, diff)))


def score_branch_dtw(
    obs: ObservationLog,
    branch: Branch,
    radius: int = 1,
    reduction: str = "mean",
) -> float:
    """Likelihood of one branch after warping the prefix-signature sequence.

    The warping path is filtered to its first occurrence per observation
    index, leaving exactly one aligned branch node per observation; their
    squared distances are reduced by the mean (default) or the sum.
    """
    if not obs.prefix_terms:
        raise ValueError("no observations consumed yet")
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}, got {reduction!r}")
    seq = np.stack(obs.prefix_terms)
    path = dtw_fast(seq, branch.values, radius=radius)
    first = first_occurrence_map(path)
    squares = []
    for i in sorted(first):
        diff = seq[i - 1] - branch.values[first[i] - 1]
        squares.append(float(np.dot(diff, diff)))
    total = math.fsum(squares)
    return _score_from_squared(total / len(squares) if reduction == "mean" else total)


def aggregate(scores, mode: str = "max", goals=None) -> dict:
    """Collapse per-branch scores into one raw score per goal.

    `scores` is an iterable of (goal, score).  Mode "max" keeps the best
    branch; "incremental_mean" averages all of a goal's branches (running
    mean over a stream, but computed order-independently).  Goals listed in
    `goals` but absent from `scores` fall back to 0: nothing speaks for
    them.
    """
    if mode not in AGGREGATIONS:
        raise ValueError(f"mode must be one of {AGGREGATIONS}, got {mode!r}")
    grouped: dict = {}
    for goal, p in scores:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"branch score {p} for goal {goal!r} outside [0, 1]")
        grouped.setdefault(goal, []).append(p)
    out = {}
    for goal, vals in grouped.items():
        out[goal] = max(vals) if mode == "max" else math.fsum(vals) / len(vals)
    if goals is not None:
        out = {g: out.get(g, 0.0) for g in goals}
    return out


@dataclass(frozen=True)
class GoalPosterior:
    """Normalized goal probabilities for one observation step."""

    goals: tuple
    probabilities: dict
    degenerate: bool = False

    def __getitem__(self, goal) -> float:
        return self.probabilities[goal]

    def top(self):
        """Most probable goal; exact ties go to the earliest goal index."""
        best = self.goals[0]
        for g in self.goals[1:]:
            if self.probabilities[g] > self.probabilities[best]:
                best = g
        return best

    def predicted_set(self, tie_tolerance: float = 1e-9) -> tuple:
        """All goals within `tie_tolerance` of the maximum probability."""
        peak = max(self.probabilities.values())
        return tuple(g for g in self.goals if self.probabilities[g] >= peak - tie_tolerance)


def normalize(raw: dict, priors: dict | None = None, goal_order=None) -> GoalPosterior:
    """Prior-weighted normalization of raw goal scores.

    All-zero evidence yields the uniform posterior with the degenerate flag
    set rather than a division error.
    """
    goals = tuple(goal_order) if goal_order is not None else tuple(raw)
    if not goals:
        raise ValueError("cannot normalize over an empty goal set")
    if priors is None:
        priors = {g: 1.0 / len(goals) for g in goals}
    else:
        missing = [g for g in goals if g not in priors]
        if missing:
            raise ValueError(f"priors missing goals: {missing}")
        if any(priors[g] < 0 for g in goals):
            raise ValueError("priors must be non-negative")
        total_p = math.fsum(priors[g] for g in goals)
        if abs(total_p - 1.0) > 1e-9:
            raise ValueError(f"priors must sum to 1 within 1e-9, got {total_p!r}")
    weighted = {g: raw.get(g, 0.0) * priors[g] for g in goals}
    total = math.fsum(weighted.values())
    if total == 0.0:
        u = 1.0 / len(goals)
        return GoalPosterior(goals=goals, probabilities={g: u for g in goals}, degenerate=True)
    return GoalPosterior(
        goals=goals,
        probabilities={g: weighted[g] / total for g in goals},
        degenerate=False,
    )


def interpolate_missing(received, last_t: int, t: int):
    """Densify one gap of an observation sequence by linear interpolation.

    `received` holds (timestep, state) pairs including entries at `last_t`
    and `t`; every integer step strictly between them is filled on the
    straight line joining the two states.  Received entries pass through
    unchanged.  A gap of zero (t == last_t + 1) is the identity.
    """
    if t <= last_t:
        raise ValueError(f"gap end {t} must exceed start {last_t}")
    table = {int(ts): np.asarray(s, dtype=np.float64) for ts, s in received}
    if last_t not in table or t not in table:
        raise ValueError(f"received sequence lacks endpoints {last_t} and {t}")
    p0, p1 = table[last_t], table[t]
    out = [(ts, table[ts]) for ts in sorted(table) if ts < last_t]
    out.append((last_t, p0))
    for step in range(last_t + 1, t):
        frac = (step - last_t) / (t - last_t)
        out.append((step, p0 + (p1 - p0) * frac))
    out.append((t, p1))
    out.extend((ts, table[ts]) for ts in sorted(table) if ts > t)
    return out


class Recognizer:
    """Streaming engine: feed timestep-tagged states, read goal posteriors.

    Parameters
    ----------
    tree : TrajectoryTree
        Compressed or uncompressed branch library.
    config : EngineConfig, optional
    goals : sequence of (goal_id, state), optional
        Goal identities and their terminal states; defaults to the tree's
        own goal bookkeeping.  Goal ids in the tree must form a subset of
        these.  States are used for the episode-termination guard.
    initial_state : array_like, optional
        State at timestep 0; lets the first observation arrive late (the
        gap is interpolated).  Defaults to the tree's recorded one.
    """

    def __init__(self, tree: TrajectoryTree, config: EngineConfig | None = None,
                 goals=None, initial_state=None):
        self.config = (config or EngineConfig()).validated()
        if self.config.depth is not None and self.config.depth != tree.depth:
            raise ValueError(
                f"config depth {self.config.depth} disagrees with tree depth {tree.depth}"
            )
        self.tree = tree
        mask = None
        if self.config.dimension_mask is not None:
            mask = np.asarray(self.config.dimension_mask, dtype=bool)

        def in_mask(state):
            if state is None:
                return None
            state = np.asarray(state, dtype=np.float64)
            # states already in masked coordinates pass through untouched
            if mask is not None and state.shape == mask.shape:
                state = state[mask]
            return state

        if goals is None:
            goal_items = [(g, tree.goal_states.get(g)) for g in tree.goal_ids]
        else:
            goal_items = [(g, s) for g, s in goals]
        self._goal_order = tuple(g for g, _ in goal_items)
        tree_goals = set(tree.goal_ids)
        if not tree_goals <= set(self._goal_order):
            raise ValueError(
                f"tree goal labels {sorted(map(str, tree_goals))} are not a subset "
                f"of the engine's goals {sorted(map(str, self._goal_order))}"
            )
        self._goal_states = {g: in_mask(s) for g, s in goal_items}
        if self.config.priors is not None:
            # surface bad priors at construction, not on the first observe
            normalize({g: 1.0 for g in self._goal_order}, self.config.priors, self._goal_order)

        self._mask = mask
        self._branches = branches(tree)
        self._initial = in_mask(initial_state if initial_state is not None
                                else tree.initial_state)
        self._obs = ObservationLog(dimension=tree.dimension, depth=tree.depth)
        self.history: list[tuple[int, GoalPosterior]] = []
        self.terminated = False
        self.terminal_goal = None

    @property
    def posterior(self) -> GoalPosterior | None:
        return self.history[-1][1] if self.history else None

    @property
    def observations(self) -> ObservationLog:
        return self._obs

    def observe(self, t: int, state) -> GoalPosterior:
        """Consume one observation and return the updated posterior.

        Timesteps must be strictly increasing integers; gaps are filled by
        linear interpolation.  An observation matching a goal state (within
        goal_tolerance, per coordinate) raises EpisodeTerminated instead of
        producing a posterior.
        """
        if self.terminated:
            raise EpisodeTerminated(self.terminal_goal, self.posterior)
        if not isinstance(t, (int, np.integer)):
            raise ValueError(f"timestep must be an integer, got {t!r}")
        t = int(t)
        if t <= self._obs.last_t:
            raise ValueError(
                f"timesteps must be strictly increasing: got {t} after {self._obs.last_t}"
            )
        state = np.asarray(state, dtype=np.float64)
        if self._mask is not None and state.shape == self._mask.shape:
            state = state[self._mask]
        if state.ndim != 1 or state.size != self.tree.dimension:
            raise ValueError(
                f"state must have dimension {self.tree.dimension}, got shape {state.shape}"
            )
        if not np.all(np.isfinite(state)):
            raise ValueError("state contains non-finite values")

        for goal, gstate in self._goal_states.items():
            if gstate is None or gstate.shape != state.shape:
                continue
            if np.max(np.abs(state - gstate)) <= self.config.goal_tolerance:
                self.terminated = True
                self.terminal_goal = goal
                raise EpisodeTerminated(goal, self.posterior)

        if self._obs.last_t < 0 and t > 0:
            if self._initial is None:
                raise ValueError(
                    "first observation must arrive at timestep 0 when no "
                    "initial state is known"
                )
            self._obs.received.append((0, self._initial.copy()))
            self._obs.append_filled(self._initial.copy())
            self._obs.last_t = 0
        if t > self._obs.last_t + 1 and self._obs.last_t >= 0:
            prev = self._obs.filled[-1]
            prev_t = self._obs.last_t
            for step in range(prev_t + 1, t):
                frac = (step - prev_t) / (t - prev_t)
                self._obs.append_filled(prev + (state - prev) * frac)
        self._obs.received.append((t, state.copy()))
        self._obs.append_filled(state.copy())
        self._obs.last_t = t

        cfg = self.config
        if cfg.mode == "plain":
            scored = [(b.goal, score_branch_plain(self._obs, b)) for b in self._branches]
        else:
            scored = [
                (b.goal, score_branch_dtw(self._obs, b, cfg.dtw_radius, cfg.dtw_reduction))
                for b in self._branches
            ]
        raw = aggregate(scored, cfg.aggregation, goals=self._goal_order)
        post = normalize(raw, cfg.priors, self._goal_order)
        self.history.append((t, post))
        return post

    def observe_sequence(self, observations) -> list[GoalPosterior]:
        """Feed (timestep, state) pairs in order; stops cleanly if a goal
        state is reached (check `terminated` afterwards)."""
        out = []
        for t, state in observations:
            try:
                out.append(self.observe(t, state))
            except EpisodeTerminated:
                break
        return out
