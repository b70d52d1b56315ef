import json

import numpy as np
import pytest

from sigrec.cli import main, parse_observations
from sigrec.sampler import save_trajectories
from sigrec.trajtree import load_tree

MAP_TEXT = """\
type octile
height 8
width 8
map
........
........
........
........
........
........
........
........
"""


@pytest.fixture
def traj_file(tmp_path):
    ptsA = np.stack([np.arange(6.0), np.zeros(6)], axis=1)
    ptsB = np.stack([np.arange(6.0), np.arange(6.0)], axis=1)
    p = tmp_path / "lib.txt"
    save_trajectories(p, [(ptsA, "A"), (ptsB, "B")])
    return p


@pytest.fixture
def tree_file(tmp_path, traj_file):
    out = tmp_path / "tree.txt"
    assert main(["build-tree", "--trajectories", str(traj_file), "--out", str(out)]) == 0
    return out


@pytest.fixture
def obs_file(tmp_path):
    p = tmp_path / "obs.txt"
    p.write_text("# replay of A, skipping t=2\n0 0.0 0.0\n1 1.0 0.0\n3 3.0 0.0\n")
    return p


# ---------------------------------------------------------------- build-tree


def test_build_tree_writes_loadable_tree(tmp_path, traj_file, capsys):
    out = tmp_path / "tree.txt"
    code = main(["build-tree", "--trajectories", str(traj_file), "--out", str(out)])
    assert code == 0
    # both trajectories start at the origin: root + 1 shared + 5 + 5
    printed = capsys.readouterr().out
    assert "nodes: 12" in printed and "goals: 2" in printed
    tree = load_tree(out)
    assert tree.goal_ids == ("A", "B")
    assert tree.depth == 2


def test_build_tree_exit_2_on_overcompression(tmp_path, traj_file, capsys):
    out = tmp_path / "tree.txt"
    code = main([
        "build-tree", "--trajectories", str(traj_file), "--out", str(out),
        "--eps-merge", "1e6",
    ])
    assert code == 2
    assert "violation" in capsys.readouterr().out


def test_build_tree_missing_file_is_input_error(tmp_path, capsys):
    code = main(["build-tree", "--trajectories", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "t.txt")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main(["no-such-command"]) == 1
    assert main(["bench", "--format", "yaml"]) == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------- recognize


def test_recognize_jsonl_stream(tmp_path, tree_file, obs_file, capsys):
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs_file)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    # three observations scored (the gap at t=2 is filled, not emitted)
    records = [json.loads(line) for line in lines]
    assert [r["t"] for r in records[:-1]] == [0, 1, 3]
    assert records[1]["top"] == "A"
    assert set(records[0]["posterior"]) == {"A", "B"}
    assert records[-1]["final_ranking"][0] == "A"


def test_recognize_csv_stream_with_ranking(tmp_path, tree_file, obs_file):
    out = tmp_path / "posts.csv"
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs_file),
                 "--format", "csv", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,A,B"
    assert lines[-1].startswith("# ranking: A > B")
    t, pa, pb = lines[1].split(",")
    assert t == "0"
    assert float(pa) == pytest.approx(0.5)
    assert float(pb) == pytest.approx(0.5)


def test_recognize_reports_termination(tmp_path, tree_file):
    obs = tmp_path / "to_goal.txt"
    obs.write_text("0 0.0 0.0\n1 1.0 0.0\n2 5.0 0.0\n")  # t=2 is goal A's state
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs)])
    assert code == 0


def test_recognize_termination_payload(tmp_path, tree_file, capsys):
    obs = tmp_path / "to_goal.txt"
    obs.write_text("0 0.0 0.0\n1 1.0 0.0\n2 5.0 0.0\n")
    main(["recognize", "--tree", str(tree_file), "--obs", str(obs)])
    last = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert last["terminated_at"] == 2
    assert last["goal"] == "A"


def test_recognize_dtw_mode_via_env(tmp_path, tree_file, obs_file, capsys, monkeypatch):
    monkeypatch.setenv("SIGREC_MODE", "dtw")
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs_file)])
    assert code == 0
    records = [json.loads(x) for x in capsys.readouterr().out.strip().splitlines()]
    assert records[-1]["final_ranking"][0] == "A"


def test_recognize_dump_cost_matrices(tmp_path, tree_file, obs_file):
    dump = tmp_path / "dumps"
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs_file),
                 "--dump-cost-matrices", str(dump)])
    assert code == 0
    files = sorted(dump.iterdir())
    assert [f.name for f in files] == ["cost_000_A.csv", "cost_001_B.csv"]
    matrix = np.loadtxt(files[0], delimiter=",")
    # 4 filled observations (the t=2 gap is interpolated) against the
    # branch's root row plus 6 trajectory rows
    assert matrix.shape == (4, 7)
    assert np.all(np.diff(matrix[0]) >= -1e-12)  # accumulated along a row


def test_recognize_depth_flag_must_match_tree(tree_file, obs_file, capsys):
    code = main(["recognize", "--tree", str(tree_file), "--obs", str(obs_file),
                 "--depth", "3"])
    assert code == 1
    assert "disagrees" in capsys.readouterr().err


def test_observation_parser_errors(tmp_path):
    p = tmp_path / "obs.txt"
    p.write_text("0 1.0\nx 2.0\n")
    with pytest.raises(Exception, match="line 2"):
        parse_observations(p)
    p.write_text("0 1.0 2.0\n1 3.0\n")
    with pytest.raises(Exception, match="line 2: expected 2"):
        parse_observations(p)
    p.write_text("# nothing\n")
    with pytest.raises(Exception, match="no observations"):
        parse_observations(p)


# ---------------------------------------------------------------- bench


def test_bench_on_trajectory_file(traj_file, capsys):
    code = main(["bench", "--trajectories", str(traj_file), "--format", "table"])
    assert code == 0
    out = capsys.readouterr().out
    assert "ppv%" in out and "lib" in out


def test_bench_on_sampled_map(tmp_path, capsys):
    map_file = tmp_path / "arena.map"
    map_file.write_text(MAP_TEXT)
    code = main([
        "bench", "--map", str(map_file), "--start", "0,0",
        "--goal", "ne=7,0", "--goal", "se=7,7",
        "--k", "2", "--seed", "11", "--format", "csv",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("name,fraction,accuracy")
    assert len(lines) == 8  # header + 7 default fractions
    assert all(row.split(",")[5] == "2" for row in lines[1:])  # pc column


def test_bench_requires_a_problem_source(capsys):
    assert main(["bench"]) == 1
    assert "provide --trajectories or --map" in capsys.readouterr().err


def test_bench_map_needs_start_and_goals(tmp_path, capsys):
    map_file = tmp_path / "arena.map"
    map_file.write_text(MAP_TEXT)
    assert main(["bench", "--map", str(map_file)]) == 1
    assert "--start" in capsys.readouterr().err


# ---------------------------------------------------------------- grid search


def test_grid_search_csv_output(traj_file, capsys):
    code = main([
        "grid-search", "--trajectories", str(traj_file),
        "--merge-grid", "0.0,0.2", "--prune-grid", "0.0",
    ])
    assert code == 0
    captured = capsys.readouterr()
    lines = captured.out.strip().splitlines()
    assert lines[0] == "k,eps_merge,eps_prune,ppv,acc,spr,pc"
    assert len(lines) == 3
    assert "best cell:" in captured.err


def test_grid_search_k_grid_on_map(tmp_path, capsys):
    map_file = tmp_path / "arena.map"
    map_file.write_text(MAP_TEXT)
    code = main([
        "grid-search", "--map", str(map_file), "--start", "0,0",
        "--goal", "ne=7,0", "--goal", "se=7,7", "--seed", "4",
        "--merge-grid", "0.0", "--prune-grid", "0.0", "--k-grid", "1,2",
    ])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "1"
    assert lines[2].split(",")[0] == "2"


# ---------------------------------------------------------------- config file


def test_config_overrides_flags(tmp_path, traj_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"eps_merge": 1e6}))
    out = tmp_path / "tree.txt"
    # the flag says no merging, the config forces the degenerate merge
    code = main([
        "build-tree", "--trajectories", str(traj_file), "--out", str(out),
        "--eps-merge", "0.0", "--config", str(cfg),
    ])
    assert code == 2
    assert "violation" in capsys.readouterr().out


def test_config_rejects_unknown_and_inapplicable_keys(tmp_path, traj_file, capsys):
    cfg = tmp_path / "cfg.json"
    out = tmp_path / "tree.txt"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["build-tree", "--trajectories", str(traj_file), "--out", str(out),
                 "--config", str(cfg)]) == 1
    assert "unknown config key" in capsys.readouterr().err
    cfg.write_text(json.dumps({"merge_grid": [0.0]}))
    assert main(["build-tree", "--trajectories", str(traj_file), "--out", str(out),
                 "--config", str(cfg)]) == 1
    assert "does not apply" in capsys.readouterr().err
    cfg.write_text("not json")
    assert main(["build-tree", "--trajectories", str(traj_file), "--out", str(out),
                 "--config", str(cfg)]) == 1


def test_config_sets_mode_for_bench(tmp_path, traj_file, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"mode": "dtw", "fractions": [0.5, 1.0]}))
    code = main(["bench", "--trajectories", str(traj_file), "--mode", "plain",
                 "--format", "csv", "--config", str(cfg)])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3  # header + the two configured fractions
