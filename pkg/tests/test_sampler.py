import math

import numpy as np
import pytest

from sigrec.sampler import (
    GridMap,
    SampleRequest,
    SamplerError,
    astar_path,
    load_trajectories,
    path_cost,
    sample_k_trajectories,
    save_trajectories,
)

from oracles import oracle_grid_shortest_cost

SQRT2 = math.sqrt(2.0)

MAP_TEXT = """\
type octile
height 5
width 6
map
......
.@@@..
.@....
.@.@@.
......
"""


def walled_grid():
    return GridMap.parse(MAP_TEXT)


# ---------------------------------------------------------------- map parsing


def test_parse_moving_ai_layout():
    grid = walled_grid()
    assert (grid.width, grid.height) == (6, 5)
    assert grid.passable(0, 0)
    assert not grid.passable(1, 1)
    assert not grid.passable(3, 3)
    assert not grid.passable(-1, 0)
    assert not grid.passable(6, 0)


def test_parse_accepts_all_terrain_codes():
    grid = GridMap.parse("type octile\nheight 1\nwidth 7\nmap\n.GS@OTW\n")
    flags = [grid.passable(x, 0) for x in range(7)]
    assert flags == [True, True, True, False, False, False, False]


def test_parse_rejects_bad_rows_and_chars():
    with pytest.raises(SamplerError, match="expected 2 map rows"):
        GridMap.parse("height 2\nwidth 3\nmap\n...\n")
    with pytest.raises(SamplerError, match="row has 2"):
        GridMap.parse("height 1\nwidth 3\nmap\n..\n")
    with pytest.raises(SamplerError, match="unknown cell character"):
        GridMap.parse("height 1\nwidth 3\nmap\n.x.\n")
    with pytest.raises(SamplerError, match="missing 'map'"):
        GridMap.parse("height 1\nwidth 3\n")
    with pytest.raises(SamplerError, match="line 3: malformed header"):
        GridMap.parse("height 1\nwidth 3\n...\n")
    with pytest.raises(SamplerError, match="missing 'height'"):
        GridMap.parse("width 3\nmap\n...\n")


def test_map_file_round_trip(tmp_path):
    p = tmp_path / "arena.map"
    p.write_text(MAP_TEXT)
    grid = GridMap.load(p)
    np.testing.assert_array_equal(grid.blocked, walled_grid().blocked)


def test_cell_center_anchoring():
    grid = GridMap.empty(4, 4)
    np.testing.assert_array_equal(grid.cell_center(2, 3), [2.5, 3.5])


# ---------------------------------------------------------------- shortest paths


def test_diagonal_run_on_open_grid():
    grid = GridMap.empty(10, 10)
    cells, cost = astar_path(grid, (0, 0), (9, 9))
    assert cells[0] == (0, 0) and cells[-1] == (9, 9)
    assert len(cells) == 10
    assert cost == pytest.approx(9 * SQRT2)


def test_astar_matches_dijkstra_oracle_on_random_maps():
    rng = np.random.default_rng(42)
    checked = 0
    while checked < 60:
        blocked = rng.random((8, 11)) < 0.30
        grid = GridMap(blocked)
        free = grid.passable_cells()
        if len(free) < 2:
            continue
        a, b = rng.choice(len(free), size=2, replace=False)
        start, goal = tuple(free[a]), tuple(free[b])
        want = oracle_grid_shortest_cost(blocked, start, goal)
        if want is None:
            with pytest.raises(SamplerError, match="unreachable"):
                astar_path(grid, start, goal)
        else:
            cells, cost = astar_path(grid, start, goal)
            assert cost == pytest.approx(want, rel=1e-9)
            assert path_cost(cells) == pytest.approx(cost, rel=1e-9)
        checked += 1


def test_no_corner_cutting():
    # the only blocked cell sits diagonally between start and goal corners
    grid = GridMap.parse("height 2\nwidth 2\nmap\n.@\n@.\n")
    with pytest.raises(SamplerError, match="unreachable"):
        astar_path(grid, (0, 0), (1, 1))


def test_astar_rejects_blocked_endpoints():
    grid = walled_grid()
    with pytest.raises(SamplerError, match="start"):
        astar_path(grid, (1, 1), (0, 0))
    with pytest.raises(SamplerError, match="goal"):
        astar_path(grid, (0, 0), (1, 1))


def test_astar_is_deterministic():
    grid = walled_grid()
    first = astar_path(grid, (0, 0), (5, 4))
    for _ in range(5):
        assert astar_path(grid, (0, 0), (5, 4)) == first


def test_path_cost_validates_adjacency():
    with pytest.raises(ValueError, match="8-adjacent"):
        path_cost([(0, 0), (2, 0)])


# ---------------------------------------------------------------- sampling


def test_first_trajectory_is_the_shortest_path():
    grid = walled_grid()
    req = SampleRequest(start=(0, 0), goal_cell=(5, 4), k=1, smooth=False)
    trajs = sample_k_trajectories(grid, req, rng=0)
    cells, cost = astar_path(grid, (0, 0), (5, 4))
    want = np.stack([grid.cell_center(x, y) for x, y in cells])
    np.testing.assert_array_equal(trajs[0], want)
    assert cost == pytest.approx(oracle_grid_shortest_cost(grid.blocked, (0, 0), (5, 4)))


def test_k_trajectories_are_distinct_and_end_at_goal():
    grid = GridMap.empty(10, 10)
    req = SampleRequest(start=(0, 0), goal_cell=(9, 9), k=3, spread=0.6)
    trajs = sample_k_trajectories(grid, req, rng=7)
    assert len(trajs) == 3
    seen = set()
    for pts in trajs:
        np.testing.assert_array_equal(pts[0], [0.5, 0.5])
        np.testing.assert_array_equal(pts[-1], [9.5, 9.5])
        seen.add(pts.tobytes())
        # goal anchor appears exactly once, at the end
        hits = np.flatnonzero(np.all(pts == np.array([9.5, 9.5]), axis=1))
        assert list(hits) == [len(pts) - 1]
    assert len(seen) == 3


def test_detours_respect_spread_budget():
    grid = GridMap.empty(12, 12)
    req = SampleRequest(start=(0, 0), goal_cell=(11, 11), k=4, spread=0.3, smooth=False)
    trajs = sample_k_trajectories(grid, req, rng=21)
    base = 11 * SQRT2
    for pts in trajs:
        cells = [(int(x - 0.5), int(y - 0.5)) for x, y in pts]
        assert path_cost(cells) <= 1.3 * base + 1e-9


def test_sampling_is_reproducible_by_seed():
    grid = GridMap.empty(9, 9)
    req = SampleRequest(start=(0, 4), goal_cell=(8, 4), k=3)
    a = sample_k_trajectories(grid, req, rng=123)
    b = sample_k_trajectories(grid, req, rng=123)
    for pa, pb in zip(a, b):
        np.testing.assert_array_equal(pa, pb)


def test_unreachable_goal_raises():
    grid = GridMap.parse("height 3\nwidth 3\nmap\n.@.\n.@.\n.@.\n")
    req = SampleRequest(start=(0, 0), goal_cell=(2, 0), k=1)
    with pytest.raises(SamplerError, match="unreachable"):
        sample_k_trajectories(grid, req, rng=0)


def test_too_many_variants_requested_reports_found_count():
    # a 1-wide corridor admits exactly one simple path and no detours
    grid = GridMap.parse("height 1\nwidth 4\nmap\n....\n")
    req = SampleRequest(start=(0, 0), goal_cell=(3, 0), k=3, spread=0.0, max_attempts=40)
    with pytest.raises(SamplerError, match="found 1 of 3"):
        sample_k_trajectories(grid, req, rng=5)


def test_smoothing_preserves_count_endpoints_and_cells():
    grid = walled_grid()
    req_raw = SampleRequest(start=(0, 0), goal_cell=(5, 4), k=1, smooth=False)
    req_smooth = SampleRequest(start=(0, 0), goal_cell=(5, 4), k=1, smooth=True)
    raw = sample_k_trajectories(grid, req_raw, rng=0)[0]
    smooth = sample_k_trajectories(grid, req_smooth, rng=0)[0]
    assert raw.shape == smooth.shape
    np.testing.assert_array_equal(raw[0], smooth[0])
    np.testing.assert_array_equal(raw[-1], smooth[-1])
    np.testing.assert_array_equal(np.floor(raw), np.floor(smooth))
    assert not np.array_equal(raw, smooth)  # at least one corner rounded


def test_sample_request_validation():
    with pytest.raises(ValueError):
        SampleRequest(start=(0, 0), goal_cell=(1, 1), k=0)
    with pytest.raises(ValueError):
        SampleRequest(start=(0, 0), goal_cell=(1, 1), k=1, spread=-0.1)


# ---------------------------------------------------------------- file format


def test_trajectory_file_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    trajs = [
        (rng.normal(size=(5, 3)) * np.pi, "gA"),
        (rng.normal(size=(2, 3)) / 3.0, "gB"),
    ]
    p = tmp_path / "trajs.txt"
    save_trajectories(p, trajs)
    back = load_trajectories(p)
    assert [g for _, g in back] == ["gA", "gB"]
    for (want, _), (got, _) in zip(trajs, back):
        assert got.dtype == np.float64
        np.testing.assert_array_equal(got, want)


def test_load_reports_line_numbers(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("d 2\ncount 1\ntraj g 2\n0.0 1.0\n2.0\n")
    with pytest.raises(ValueError, match="line 5: point has 1 coordinates"):
        load_trajectories(p)
    p.write_text("d 2\ncount 1\ntraj g 2\n0.0 1.0\n2.0 oops\n")
    with pytest.raises(ValueError, match="line 5: non-numeric"):
        load_trajectories(p)
    p.write_text("d 2\ncount 2\ntraj g 2\n0.0 1.0\n2.0 3.0\n")
    with pytest.raises(ValueError, match="unexpected end of file"):
        load_trajectories(p)
    p.write_text("count 1\nd 2\n")
    with pytest.raises(ValueError, match="line 1: expected 'd"):
        load_trajectories(p)
    p.write_text("d 2\ncount 1\ntraj g 2\n0.0 1.0\n2.0 3.0\nextra\n")
    with pytest.raises(ValueError, match="line 6: trailing"):
        load_trajectories(p)


def test_empty_trajectory_file_warns(tmp_path):
    p = tmp_path / "empty.txt"
    p.write_text("\n  \n")
    with pytest.warns(UserWarning, match="empty"):
        assert load_trajectories(p) == []


def test_save_validates_inputs(tmp_path):
    p = tmp_path / "t.txt"
    with pytest.raises(ValueError, match="empty"):
        save_trajectories(p, [])
    with pytest.raises(ValueError, match="dimension 3, expected 2"):
        save_trajectories(p, [(np.zeros((2, 2)), "a"), (np.zeros((2, 3)), "b")])
    with pytest.raises(ValueError, match="whitespace"):
        save_trajectories(p, [(np.zeros((2, 2)), "bad goal")])
    with pytest.raises(ValueError, match="n>=2"):
        save_trajectories(p, [(np.zeros((1, 2)), "a")])
