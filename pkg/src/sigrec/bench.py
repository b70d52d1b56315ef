"""Benchmark harness: metrics, experiment runner, parameter grid search.

A *problem* bundles a branch library (trajectories with goal labels) and
ground-truth episodes to replay against it.  An *experiment* fixes the
engine parameters and observation fractions.  Running one yields a
metrics report:

    ppv   percent of prediction events that were correct.  Every scored
          observation step emits one prediction (the posterior argmax,
          ties to the lowest goal index); a correct one is a TP, a wrong
          one an FP, and ppv = 100 * TP / (TP + FP) pooled over all steps.
    acc   percent of episodes whose argmax is correct at a checkpoint;
          reported per observation fraction, with the headline number
          taken at the largest fraction.  The checkpoint for fraction f of
          an L-observation episode is observation max(1, ceil(f * L)).
    spr   mean size of the predicted goal set: every goal within
          tie_tolerance of the posterior peak counts as predicted.
    pc    sampler invocations that built the problem libraries (one per
          goal per sampled problem, 0 for libraries loaded from files).

Offline time covers library construction plus tree compression; online
time is the summed per-observation latency.  `ci95` carries normal-theory
95% half-widths (1.96 * std / sqrt(n)) for the step- and problem-level
quantities.  Compressed trees are health-checked and any violations (for
example branch counts collapsing below the goal count at aggressive
thresholds) surface in the report.

Posterior updates are streaming, so replaying a full episode once and
reading the posterior at each checkpoint is identical to re-running the
engine on each truncated prefix.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from sigrec.recognizer import EngineConfig, EpisodeTerminated, Recognizer
from sigrec.sampler import GridMap, SampleRequest, sample_k_trajectories
from sigrec.trajtree import build_tree, merge, prune, validate

__all__ = [
    "EpisodeTrace",
    "ExperimentSpec",
    "GridSearchResult",
    "MetricsReport",
    "ProblemSpec",
    "checkpoint_index",
    "emit_report",
    "grid_search",
    "run_experiment",
    "sampled_problem",
    "summarize",
]

DEFAULT_FRACTIONS = tuple(i / 7.0 for i in range(1, 8))


@dataclass(frozen=True)
class ProblemSpec:
    """One recognition instance: a branch library plus labelled episodes.

    `library` holds (points, goal) training trajectories; `episodes` holds
    (true_goal, points) observation runs.  `sampler_calls` records how
    many sampler invocations produced the library.
    """

    name: str
    library: tuple
    episodes: tuple
    sampler_calls: int = 0

    def __post_init__(self):
        object.__setattr__(self, "library", tuple(self.library))
        object.__setattr__(self, "episodes", tuple(self.episodes))
        if not self.library:
            raise ValueError(f"problem {self.name!r} has an empty library")
        if not self.episodes:
            raise ValueError(f"problem {self.name!r} has no episodes")
        if self.sampler_calls < 0:
            raise ValueError("sampler_calls must be non-negative")


def sampled_problem(name: str, grid: GridMap, start, goal_cells: dict, k: int,
                    rng=None, spread: float = 0.5, smooth: bool = True) -> ProblemSpec:
    """Build a ProblemSpec by sampling k trajectories per goal on a grid.

    Episodes are self-replays of each goal's shortest trajectory, so the
    ground truth is known by construction.  One sampler invocation per
    goal is recorded for the pc metric.
    """
    rng = np.random.default_rng(rng)
    library = []
    episodes = []
    calls = 0
    for goal, cell in goal_cells.items():
        request = SampleRequest(
            start=tuple(start), goal_cell=tuple(cell), k=k, spread=spread, smooth=smooth
        )
        trajs = sample_k_trajectories(grid, request, rng=rng)
        calls += 1
        library.extend((traj, goal) for traj in trajs)
        episodes.append((goal, trajs[0]))
    return ProblemSpec(name=name, library=tuple(library), episodes=tuple(episodes),
                       sampler_calls=calls)


@dataclass(frozen=True)
class ExperimentSpec:
    """Engine and evaluation parameters for one benchmark run."""

    name: str = "experiment"
    depth: int = 2
    eps_merge: float = 0.0
    eps_prune: float = 0.0
    mode: str = "plain"
    aggregation: str = "max"
    dtw_radius: int = 1
    dtw_reduction: str = "mean"
    priors: dict | None = None
    fractions: tuple = DEFAULT_FRACTIONS
    tie_tolerance: float = 1e-9
    n_jobs: int | None = None

    def validated(self) -> "ExperimentSpec":
        if self.eps_merge < 0 or self.eps_prune < 0:
            raise ValueError("compression thresholds must be non-negative")
        if not self.fractions:
            raise ValueError("fractions must be non-empty")
        fr = tuple(float(f) for f in self.fractions)
        if any(not 0.0 < f <= 1.0 for f in fr):
            raise ValueError(f"fractions must lie in (0, 1], got {fr}")
        if list(fr) != sorted(fr):
            raise ValueError("fractions must be sorted ascending")
        self.engine_config()  # delegate the remaining checks
        return replace(self, fractions=fr)

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            depth=self.depth,
            mode=self.mode,
            aggregation=self.aggregation,
            dtw_radius=self.dtw_radius,
            dtw_reduction=self.dtw_reduction,
            priors=self.priors,
            tie_tolerance=self.tie_tolerance,
        ).validated()


@dataclass(frozen=True)
class EpisodeTrace:
    """Posterior history of one episode replay."""

    truth: object
    posteriors: tuple  # GoalPosterior per scored observation
    length: int  # observation count before truncation by goal arrival


def checkpoint_index(fraction: float, length: int, scored: int) -> int:
    """0-based posterior index for a fraction of an episode.

    The checkpoint is observation max(1, ceil(fraction * length)), clamped
    to the number of actually scored steps (goal arrival ends an episode
    early).
    """
    step = max(1, math.ceil(fraction * length))
    return min(step, scored) - 1


def summarize(traces, fractions, tie_tolerance: float = 1e-9):
    """Pool traces into (ppv_pct, spr, acc_pct_by_fraction, steps, ci95).

    Traces that produced no posterior (single-observation episodes ending
    at the goal) carry no information and are skipped.
    """
    correct = []
    set_sizes = []
    hits = {float(f): 0 for f in fractions}
    scored_eps = 0
    for trace in traces:
        if not trace.posteriors:
            continue
        scored_eps += 1
        for post in trace.posteriors:
            set_sizes.append(len(post.predicted_set(tie_tolerance)))
            correct.append(1.0 if post.top() == trace.truth else 0.0)
        for f in hits:
            post = trace.posteriors[checkpoint_index(f, trace.length, len(trace.posteriors))]
            if post.top() == trace.truth:
                hits[f] += 1
    if not correct:
        raise ValueError("no scored observation steps; nothing to summarize")
    correct = np.asarray(correct)
    set_sizes = np.asarray(set_sizes, dtype=np.float64)
    n = correct.size
    acc = {f: 100.0 * hits[f] / scored_eps for f in hits}
    ci95 = {
        "ppv": float(100.0 * 1.96 * correct.std(ddof=0) / math.sqrt(n)),
        "spr": float(1.96 * set_sizes.std(ddof=0) / math.sqrt(n)),
    }
    return float(100.0 * correct.mean()), float(set_sizes.mean()), acc, n, ci95


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated benchmark outcome, serializable to plain dicts.

    `ppv` and the accuracy values are percentages in [0, 100]; `spr` is a
    set size >= 1; `pc` counts sampler invocations.  `violations` lists
    tree health problems found after compression, prefixed by the problem
    name.
    """

    name: str
    ppv: float
    acc: float
    spr: float
    pc: int
    accuracy_by_fraction: dict
    episodes: int
    steps: int
    offline_seconds: float
    online_seconds: float
    ci95: dict = field(default_factory=dict)
    violations: tuple = ()
    parameters: dict = field(default_factory=dict)

    def objective(self) -> float:
        """Scalar quality used by the grid search."""
        return self.ppv

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ppv": self.ppv,
            "acc": self.acc,
            "spr": self.spr,
            "pc": self.pc,
            "accuracy_by_fraction": {repr(float(k)): v
                                     for k, v in self.accuracy_by_fraction.items()},
            "episodes": self.episodes,
            "steps": self.steps,
            "offline_seconds": self.offline_seconds,
            "online_seconds": self.online_seconds,
            "ci95": dict(self.ci95),
            "violations": list(self.violations),
            "parameters": dict(self.parameters),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricsReport":
        data = dict(data)
        data["accuracy_by_fraction"] = {
            float(k): v for k, v in data["accuracy_by_fraction"].items()
        }
        data["violations"] = tuple(data.get("violations", ()))
        return cls(**data)


def _replay_problem(problem: ProblemSpec, spec: ExperimentSpec):
    """Traces, offline seconds, per-step seconds, violations for one problem."""
    t0 = time.perf_counter()
    tree = build_tree(list(problem.library), depth=spec.depth)
    merge(tree, spec.eps_merge)
    prune(tree, spec.eps_prune)
    offline = time.perf_counter() - t0
    diag = validate(tree, goals=dict.fromkeys(g for _, g in problem.library))
    violations = tuple(f"{problem.name}: {v}" for v in diag.violations)

    traces = []
    step_times = []
    for truth, points in problem.episodes:
        engine = Recognizer(tree, spec.engine_config())
        posts = []
        for t, state in enumerate(np.asarray(points, dtype=np.float64)):
            t1 = time.perf_counter()
            try:
                posts.append(engine.observe(t, state))
            except EpisodeTerminated:
                step_times.append(time.perf_counter() - t1)
                break
            step_times.append(time.perf_counter() - t1)
        traces.append(EpisodeTrace(truth=truth, posteriors=tuple(posts), length=len(points)))
    return traces, offline, step_times, violations


def run_experiment(problems, spec: ExperimentSpec) -> MetricsReport:
    """Replay every problem's episodes under one parameter cell.

    With n_jobs set, problems run in parallel worker processes (joblib);
    results are reduced in problem order either way, so the report does
    not depend on scheduling.
    """
    spec = spec.validated()
    problems = list(problems)
    if not problems:
        raise ValueError("no problems to run")

    if spec.n_jobs is not None and spec.n_jobs != 1 and len(problems) > 1:
        from joblib import Parallel, delayed

        outcomes = Parallel(n_jobs=spec.n_jobs)(
            delayed(_replay_problem)(p, spec) for p in problems
        )
    else:
        outcomes = [_replay_problem(p, spec) for p in problems]

    traces = []
    offline_each = []
    step_times = []
    violations = []
    for tr, off, st, viol in outcomes:
        traces.extend(tr)
        offline_each.append(off)
        step_times.extend(st)
        violations.extend(viol)
    ppv, spr, acc, steps, ci95 = summarize(traces, spec.fractions, spec.tie_tolerance)
    times = np.asarray(step_times, dtype=np.float64)
    offline_arr = np.asarray(offline_each, dtype=np.float64)
    ci95["online_step_seconds"] = (
        float(1.96 * times.std(ddof=0) / math.sqrt(times.size)) if times.size else 0.0
    )
    ci95["offline_seconds_per_problem"] = (
        float(1.96 * offline_arr.std(ddof=0) / math.sqrt(offline_arr.size))
    )
    return MetricsReport(
        name=spec.name,
        ppv=ppv,
        acc=acc[max(acc)],
        spr=spr,
        pc=sum(p.sampler_calls for p in problems),
        accuracy_by_fraction=acc,
        episodes=sum(len(p.episodes) for p in problems),
        steps=steps,
        offline_seconds=float(offline_arr.sum()),
        online_seconds=float(times.sum()),
        ci95=ci95,
        violations=tuple(violations),
        parameters={
            "depth": spec.depth,
            "eps_merge": spec.eps_merge,
            "eps_prune": spec.eps_prune,
            "mode": spec.mode,
            "aggregation": spec.aggregation,
            "k": None,
        },
    )


@dataclass(frozen=True)
class GridSearchResult:
    """Exhaustive sweep outcome: every cell's report plus the winner."""

    best_parameters: dict
    best_report: MetricsReport
    table: tuple  # (parameters dict, MetricsReport) per cell

    def to_csv(self) -> str:
        """Heatmap data, one row per cell: k, eps_merge, eps_prune, ppv,
        acc, spr, pc."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["k", "eps_merge", "eps_prune", "ppv", "acc", "spr", "pc"])
        for params, report in self.table:
            writer.writerow([
                params["k"], params["eps_merge"], params["eps_prune"],
                repr(report.ppv), repr(report.acc), repr(report.spr), report.pc,
            ])
        return buf.getvalue()


def grid_search(problems_by_k, spec: ExperimentSpec, merge_values, prune_values) -> GridSearchResult:
    """Exhaustive sweep over (k, eps_merge, eps_prune) cells.

    `problems_by_k` maps a library size k to its problem list, so sampling
    happens once per k while trees are rebuilt per cell (compression is
    destructive, and rebuilding keeps cells independent).  A plain problem
    list is treated as a single unnamed k.  The winner maximizes ppv;
    exact ties prefer the smaller prune threshold, then the smaller merge
    threshold, then the smaller k.
    """
    if not isinstance(problems_by_k, dict):
        problems_by_k = {None: list(problems_by_k)}
    merge_values = [float(v) for v in merge_values]
    prune_values = [float(v) for v in prune_values]
    if not merge_values or not prune_values or not problems_by_k:
        raise ValueError("grid search needs at least one value per axis")

    table = []
    for k, problems in problems_by_k.items():
        for em in merge_values:
            for ep in prune_values:
                cell = replace(
                    spec,
                    name=f"{spec.name}[k={k},merge={em},prune={ep}]",
                    eps_merge=em,
                    eps_prune=ep,
                )
                report = run_experiment(problems, cell)
                params = dict(report.parameters)
                params["k"] = k
                report = replace(report, parameters=params)
                table.append((params, report))

    def rank(entry):
        params, report = entry
        k = params["k"] if params["k"] is not None else 0
        return (-report.objective(), params["eps_prune"], params["eps_merge"], k)

    best_params, best_report = min(table, key=rank)
    return GridSearchResult(
        best_parameters=best_params, best_report=best_report, table=tuple(table)
    )


# ------------------------------------------------------------------ reporting


def _fmt_pm(value: float, hw: float | None) -> str:
    return f"{value:.3f}" if hw is None else f"{value:.3f} ± {hw:.3f}"


def emit_report(reports, fmt: str = "table") -> str:
    """Render reports as 'csv', 'jsonl', or an aligned text 'table'.

    CSV column order is fixed: name, fraction, accuracy, ppv, spr, pc,
    episodes, steps, offline_seconds, online_seconds; one row per
    (report, fraction).  jsonl emits one JSON object per report.  The
    text table gives one summary row per report (ppv, acc, spr, pc and
    timing, with 95% half-widths where tracked) followed by any tree
    health violations.
    """
    if isinstance(reports, MetricsReport):
        reports = [reports]
    reports = list(reports)
    if fmt == "jsonl":
        return "\n".join(json.dumps(r.to_dict(), sort_keys=True) for r in reports) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["name", "fraction", "accuracy", "ppv", "spr", "pc",
                         "episodes", "steps", "offline_seconds", "online_seconds"])
        for r in reports:
            for f in sorted(r.accuracy_by_fraction):
                writer.writerow([
                    r.name, f"{f:.6f}", repr(r.accuracy_by_fraction[f]), repr(r.ppv),
                    repr(r.spr), r.pc, r.episodes, r.steps,
                    f"{r.offline_seconds:.6f}", f"{r.online_seconds:.6f}",
                ])
        return buf.getvalue()
    if fmt == "table":
        header = ["name", "ppv%", "acc%", "spr", "pc", "online_s", "offline_s"]
        rows = []
        for r in reports:
            rows.append([
                r.name,
                _fmt_pm(r.ppv, r.ci95.get("ppv")),
                f"{r.acc:.3f}",
                _fmt_pm(r.spr, r.ci95.get("spr")),
                str(r.pc),
                f"{r.online_seconds:.6f}",
                f"{r.offline_seconds:.6f}",
            ])
        widths = [max(len(header[i]), *(len(row[i]) for row in rows)) if rows
                  else len(header[i]) for i in range(len(header))]
        lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)),
                 "  ".join("-" * w for w in widths)]
        for row in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        for r in reports:
            for v in r.violations:
                lines.append(f"!! {v}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
