"""Command-line front end.

Subcommands:

    build-tree   trajectories file -> tree file + validation report
    recognize    tree file + observation file -> per-step posteriors
    bench        one parameter cell over sampled or file-based problems
    grid-search  (k, eps_merge, eps_prune) sweep with heatmap output

Exit codes: 0 success, 1 input error (bad flags, unreadable or malformed
files), 2 validation violation (the produced or loaded tree fails its
health checks).  A JSON config file given with --config overrides any
flag it names; the accepted keys are the long flag names with underscores
(eps_merge, eps_prune, k, depth, mode, aggregation, dtw_radius,
dtw_reduction, seed, format, fractions, spread, priors, merge_grid,
prune_grid, k_grid, n_jobs).  The SIGREC_MODE environment variable
supplies the default scoring mode; an explicit --mode flag or config key
wins over it.

Observation files are plain text: one observation per line, a 0-based
integer timestep followed by the state coordinates, whitespace-separated.
Lines starting with '#' and blank lines are skipped.  Timestep gaps are
allowed; the engine fills them by linear interpolation.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from sigrec.bench import (
    ExperimentSpec,
    ProblemSpec,
    emit_report,
    grid_search,
    run_experiment,
    sampled_problem,
)
from sigrec.dtw import accumulated_cost_matrix
from sigrec.recognizer import EngineConfig, EpisodeTerminated, Recognizer
from sigrec.sampler import GridMap, SamplerError, load_trajectories
from sigrec.trajtree import (
    TreeFormatError,
    branches,
    build_tree,
    load_tree,
    merge,
    prune,
    save_tree,
    validate,
)

__all__ = ["main"]


class CliInputError(Exception):
    """Input-side failure; reported on stderr and mapped to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, but this tool reserves
    # 2 for validation violations; route usage errors to exit code 1
    def error(self, message):
        raise CliInputError(message)


# ------------------------------------------------------------------ small parsers


def _parse_cell(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise CliInputError(f"expected 'x,y', got {text!r}")
    try:
        return (int(parts[0]), int(parts[1]))
    except ValueError:
        raise CliInputError(f"cell coordinates must be integers, got {text!r}") from None


def _parse_goal(text: str) -> tuple:
    if "=" not in text:
        raise CliInputError(f"expected 'name=x,y', got {text!r}")
    name, _, cell = text.partition("=")
    if not name:
        raise CliInputError(f"goal name missing in {text!r}")
    return name, _parse_cell(cell)


def _parse_float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    try:
        return tuple(float(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise CliInputError(f"expected comma-separated numbers, got {text!r}") from None


def _parse_int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    try:
        return tuple(int(v) for v in str(text).split(",") if v.strip())
    except ValueError:
        raise CliInputError(f"expected comma-separated integers, got {text!r}") from None


def parse_observations(path) -> list:
    """Read timestep-tagged state vectors; errors carry line numbers."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliInputError(f"cannot read observations: {exc}") from None
    out = []
    dim = None
    for i, line in enumerate(lines, start=1):
        token = line.strip()
        if not token or token.startswith("#"):
            continue
        parts = token.split()
        if len(parts) < 2:
            raise CliInputError(f"{path}: line {i}: need a timestep and coordinates")
        try:
            t = int(parts[0])
        except ValueError:
            raise CliInputError(f"{path}: line {i}: bad timestep {parts[0]!r}") from None
        try:
            state = np.array([float(v) for v in parts[1:]], dtype=np.float64)
        except ValueError:
            raise CliInputError(f"{path}: line {i}: non-numeric coordinate") from None
        if dim is None:
            dim = state.size
        elif state.size != dim:
            raise CliInputError(
                f"{path}: line {i}: expected {dim} coordinates, got {state.size}"
            )
        out.append((t, state))
    if not out:
        raise CliInputError(f"{path}: no observations found")
    return out


# ------------------------------------------------------------------ config file

CONFIG_CASTS = {
    "eps_merge": float,
    "eps_prune": float,
    "k": int,
    "depth": int,
    "mode": str,
    "aggregation": str,
    "dtw_radius": int,
    "dtw_reduction": str,
    "seed": int,
    "format": str,
    "spread": float,
    "n_jobs": int,
    "fractions": _parse_float_list,
    "merge_grid": _parse_float_list,
    "prune_grid": _parse_float_list,
    "k_grid": _parse_int_list,
    "priors": dict,
}


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    try:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliInputError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CliInputError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise CliInputError("config must be a JSON object")
    for key, value in raw.items():
        if key not in CONFIG_CASTS:
            raise CliInputError(f"unknown config key {key!r}")
        if not hasattr(args, key):
            raise CliInputError(f"config key {key!r} does not apply to this subcommand")
        cast = CONFIG_CASTS[key]
        if cast is dict:
            if not isinstance(value, dict):
                raise CliInputError(f"config key {key!r} must be an object")
            setattr(args, key, value)
        else:
            setattr(args, key, cast(value))


# ------------------------------------------------------------------ shared pieces


def _write_output(args, text: str) -> None:
    if getattr(args, "out", None) in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")


def _load_problem(args, k: int) -> ProblemSpec:
    """File-based or sampled problem from the shared input flags."""
    if args.trajectories:
        library = load_trajectories(args.trajectories)
        if not library:
            raise CliInputError(f"{args.trajectories}: empty trajectory set")
        episodes = []
        seen = set()
        for pts, goal in library:
            if goal not in seen:
                seen.add(goal)
                episodes.append((goal, pts))
        return ProblemSpec(
            name=Path(args.trajectories).stem,
            library=tuple(library),
            episodes=tuple(episodes),
            sampler_calls=0,
        )
    if args.map:
        if not args.goal or args.start is None:
            raise CliInputError("--map needs --start and at least one --goal")
        grid = GridMap.load(args.map)
        goals = dict(_parse_goal(g) for g in args.goal)
        return sampled_problem(
            name=Path(args.map).stem,
            grid=grid,
            start=_parse_cell(args.start),
            goal_cells=goals,
            k=k,
            rng=args.seed,
            spread=args.spread,
        )
    raise CliInputError("provide --trajectories or --map")


def _add_problem_flags(sub):
    sub.add_argument("--trajectories", help="trajectory file (library + self-replay episodes)")
    sub.add_argument("--map", help="grid map file")
    sub.add_argument("--start", help="start cell 'x,y' (with --map)")
    sub.add_argument("--goal", action="append",
                     help="goal cell 'name=x,y' (repeatable, with --map)")
    sub.add_argument("--k", type=int, default=5, help="trajectories per goal (with --map)")
    sub.add_argument("--spread", type=float, default=0.5,
                     help="detour cost headroom for sampling")
    sub.add_argument("--seed", type=int, default=None, help="sampling seed")


def _add_engine_flags(sub, mode_default, with_eps=True, depth_default=2):
    sub.add_argument("--depth", type=int, default=depth_default,
                     help="signature truncation depth")
    if with_eps:
        sub.add_argument("--eps-merge", dest="eps_merge", type=float, default=0.0)
        sub.add_argument("--eps-prune", dest="eps_prune", type=float, default=0.0)
    sub.add_argument("--mode", choices=("plain", "dtw"), default=mode_default)
    sub.add_argument("--aggregation", choices=("max", "incremental_mean"), default="max")
    sub.add_argument("--dtw-radius", dest="dtw_radius", type=int, default=1)
    sub.add_argument("--dtw-reduction", dest="dtw_reduction",
                     choices=("mean", "sum"), default="mean")


# ------------------------------------------------------------------ subcommands


def _cmd_build_tree(args) -> int:
    trajectories = load_trajectories(args.trajectories)
    if not trajectories:
        raise CliInputError(f"{args.trajectories}: empty trajectory set")
    tree = build_tree(trajectories, depth=args.depth)
    merge(tree, args.eps_merge)
    prune(tree, args.eps_prune)
    save_tree(tree, args.out)
    diag = validate(tree)
    print(f"tree written to {args.out}")
    print(f"nodes: {diag.node_count}  leaves: {diag.leaf_count}  "
          f"height: {diag.height}  goals: {diag.goal_count}")
    for v in diag.violations:
        print(f"violation: {v}")
    return 2 if diag.violations else 0


def _cmd_recognize(args) -> int:
    tree = load_tree(args.tree)
    diag = validate(tree)
    observations = parse_observations(args.obs)
    config = EngineConfig(
        depth=args.depth,
        mode=args.mode or "plain",
        aggregation=args.aggregation,
        dtw_radius=args.dtw_radius,
        dtw_reduction=args.dtw_reduction,
        priors=args.priors,
    )
    engine = Recognizer(tree, config)
    rows = []
    terminated_at = None
    for t, state in observations:
        try:
            post = engine.observe(t, state)
        except EpisodeTerminated as exc:
            terminated_at = (t, exc.goal)
            break
        rows.append((t, post))

    goals = list(tree.goal_ids)
    lines = []
    if args.format == "csv":
        lines.append("t," + ",".join(str(g) for g in goals))
        for t, post in rows:
            lines.append(f"{t}," + ",".join(repr(post[g]) for g in goals))
        if rows:
            ranked = sorted(goals, key=lambda g: (-rows[-1][1][g], goals.index(g)))
            lines.append("# ranking: " + " > ".join(str(g) for g in ranked))
        if terminated_at:
            lines.append(f"# terminated at t={terminated_at[0]} goal={terminated_at[1]}")
    else:
        for t, post in rows:
            lines.append(json.dumps(
                {"t": t, "posterior": {str(g): post[g] for g in goals},
                 "top": str(post.top())},
                sort_keys=True,
            ))
        final: dict = {}
        if rows:
            ranked = sorted(goals, key=lambda g: (-rows[-1][1][g], goals.index(g)))
            final["final_ranking"] = [str(g) for g in ranked]
        if terminated_at:
            final["terminated_at"] = terminated_at[0]
            final["goal"] = str(terminated_at[1])
        if final:
            lines.append(json.dumps(final, sort_keys=True))
    _write_output(args, "\n".join(lines) + "\n")

    if args.dump_cost_matrices and rows:
        dump_dir = Path(args.dump_cost_matrices)
        dump_dir.mkdir(parents=True, exist_ok=True)
        seq = np.stack(engine.observations.prefix_terms)
        for i, branch in enumerate(branches(tree)):
            matrix = accumulated_cost_matrix(seq, branch.values)
            np.savetxt(dump_dir / f"cost_{i:03d}_{branch.goal}.csv", matrix, delimiter=",")
    return 2 if diag.violations else 0


def _cmd_bench(args) -> int:
    problem = _load_problem(args, args.k)
    spec = ExperimentSpec(
        name=problem.name,
        depth=args.depth,
        eps_merge=args.eps_merge,
        eps_prune=args.eps_prune,
        mode=args.mode or "plain",
        aggregation=args.aggregation,
        dtw_radius=args.dtw_radius,
        dtw_reduction=args.dtw_reduction,
        fractions=_parse_float_list(args.fractions) if args.fractions else
        tuple(i / 7.0 for i in range(1, 8)),
        n_jobs=args.n_jobs,
    )
    report = run_experiment([problem], spec)
    _write_output(args, emit_report(report, fmt=args.format))
    return 2 if report.violations else 0


def _cmd_grid_search(args) -> int:
    merge_grid = _parse_float_list(args.merge_grid)
    prune_grid = _parse_float_list(args.prune_grid)
    if args.trajectories:
        problems_by_k = {None: [_load_problem(args, k=1)]}
    else:
        k_values = _parse_int_list(args.k_grid) if args.k_grid else (args.k,)
        problems_by_k = {k: [_load_problem(args, k)] for k in k_values}
    spec = ExperimentSpec(
        name=args.name,
        depth=args.depth,
        mode=args.mode or "plain",
        aggregation=args.aggregation,
        dtw_radius=args.dtw_radius,
        dtw_reduction=args.dtw_reduction,
        fractions=_parse_float_list(args.fractions) if args.fractions else
        tuple(i / 7.0 for i in range(1, 8)),
        n_jobs=args.n_jobs,
    )
    result = grid_search(problems_by_k, spec, merge_grid, prune_grid)
    if args.format == "csv":
        _write_output(args, result.to_csv())
    else:
        body = emit_report([r for _, r in result.table], fmt=args.format)
        _write_output(args, body)
    best = result.best_parameters
    print(f"best cell: k={best['k']} eps_merge={best['eps_merge']} "
          f"eps_prune={best['eps_prune']} ppv={result.best_report.ppv:.3f}",
          file=sys.stderr)
    return 0


# ------------------------------------------------------------------ wiring


def build_parser() -> argparse.ArgumentParser:
    mode_env = os.environ.get("SIGREC_MODE")
    parser = _Parser(prog="sigrec", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build-tree", help="build, compress, and save a tree")
    p_build.add_argument("--trajectories", required=True)
    p_build.add_argument("--out", required=True, help="tree file destination")
    p_build.add_argument("--depth", type=int, default=2)
    p_build.add_argument("--eps-merge", dest="eps_merge", type=float, default=0.0)
    p_build.add_argument("--eps-prune", dest="eps_prune", type=float, default=0.0)
    p_build.add_argument("--config", help="JSON config overriding flags")
    p_build.set_defaults(func=_cmd_build_tree)

    p_rec = sub.add_parser("recognize", help="stream observations against a tree")
    p_rec.add_argument("--tree", required=True)
    p_rec.add_argument("--obs", required=True, help="observation file")
    p_rec.add_argument("--format", choices=("csv", "jsonl"), default="jsonl")
    p_rec.add_argument("--out", default="-")
    p_rec.add_argument("--dump-cost-matrices", dest="dump_cost_matrices",
                       help="directory for per-branch alignment cost CSVs")
    p_rec.add_argument("--config", help="JSON config overriding flags")
    p_rec.set_defaults(priors=None, func=_cmd_recognize)
    # the tree file fixes the depth; an explicit flag must agree with it
    _add_engine_flags(p_rec, mode_env, with_eps=False, depth_default=None)

    p_bench = sub.add_parser("bench", help="run one benchmark cell")
    _add_problem_flags(p_bench)
    _add_engine_flags(p_bench, mode_env)
    p_bench.add_argument("--fractions", help="comma-separated observation fractions")
    p_bench.add_argument("--format", choices=("csv", "jsonl", "table"), default="table")
    p_bench.add_argument("--n-jobs", dest="n_jobs", type=int, default=None)
    p_bench.add_argument("--out", default="-")
    p_bench.add_argument("--config", help="JSON config overriding flags")
    p_bench.set_defaults(func=_cmd_bench)

    p_grid = sub.add_parser("grid-search", help="sweep merge/prune/k")
    _add_problem_flags(p_grid)
    _add_engine_flags(p_grid, mode_env)
    p_grid.add_argument("--merge-grid", dest="merge_grid", required=True,
                        help="comma-separated eps_merge values")
    p_grid.add_argument("--prune-grid", dest="prune_grid", required=True,
                        help="comma-separated eps_prune values")
    p_grid.add_argument("--k-grid", dest="k_grid", help="comma-separated k values")
    p_grid.add_argument("--fractions", help="comma-separated observation fractions")
    p_grid.add_argument("--format", choices=("csv", "jsonl", "table"), default="csv")
    p_grid.add_argument("--n-jobs", dest="n_jobs", type=int, default=None)
    p_grid.add_argument("--out", default="-")
    p_grid.add_argument("--name", default="grid")
    p_grid.add_argument("--config", help="JSON config overriding flags")
    p_grid.set_defaults(func=_cmd_grid_search)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, SamplerError, TreeFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
