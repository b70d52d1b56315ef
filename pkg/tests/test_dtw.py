"""DTW: brute-force enumeration oracle, fast/exact agreement, tie-breaks."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sigrec.dtw import (
    WarpingPath,
    accumulated_cost_matrix,
    dtw_exact,
    dtw_fast,
    first_occurrence_map,
)

from oracles import oracle_all_warping_paths, oracle_dtw_cost


def path_cost(a, b, pairs):
    A = np.atleast_2d(np.asarray(a, float).T).T
    B = np.atleast_2d(np.asarray(b, float).T).T
    return sum(float(np.sum((A[i - 1] - B[j - 1]) ** 2)) for i, j in pairs)


class TestExact:
    def test_identical_sequences_zero_cost_diagonal(self):
        x = np.arange(10.0).reshape(-1, 2)
        path = dtw_exact(x, x)
        assert path.total_cost == 0.0
        assert path.pairs == tuple((i, i) for i in range(1, 6))

    def test_three_by_four_shape(self):
        # instance whose optimum marches the diagonal and then pads the
        # longer sequence's tail
        a = [0.0, 5.0, 9.0]
        b = [0.0, 5.0, 9.0, 10.0]
        path = dtw_exact(a, b)
        assert path.pairs == ((1, 1), (2, 2), (3, 3), (3, 4))
        assert path.total_cost == pytest.approx(1.0)

    def test_cost_matches_enumeration_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(150):
            n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
            d = int(rng.integers(1, 3))
            a, b = rng.normal(size=(n, d)), rng.normal(size=(m, d))
            got = dtw_exact(a, b)
            assert got.total_cost == pytest.approx(oracle_dtw_cost(a, b), rel=1e-12)

    def test_returned_path_attains_reported_cost(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = rng.normal(size=(int(rng.integers(1, 9)), 2))
            b = rng.normal(size=(int(rng.integers(1, 9)), 2))
            path = dtw_exact(a, b)
            assert path_cost(a, b, path.pairs) == pytest.approx(path.total_cost, rel=1e-12)

    def test_path_is_optimal_among_all_paths(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            n, m = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            a, b = rng.normal(size=(n, 1)), rng.normal(size=(m, 1))
            got = dtw_exact(a, b)
            best = min(path_cost(a, b, [(i + 1, j + 1) for i, j in p])
                       for p in oracle_all_warping_paths(n, m))
            assert got.total_cost == pytest.approx(best, rel=1e-12)

    def test_tie_break_prefers_diagonal(self):
        # all-zero sequences tie every path; the diagonal must win
        a = np.zeros((4, 1))
        b = np.zeros((4, 1))
        assert dtw_exact(a, b).pairs == ((1, 1), (2, 2), (3, 3), (4, 4))

    def test_tie_break_advances_j_before_i(self):
        # zero costs everywhere, one sequence longer: after the diagonal is
        # exhausted the remaining moves are forced, but the backtrack from
        # the corner must absorb the j-surplus first
        a = np.zeros((2, 1))
        b = np.zeros((4, 1))
        path = dtw_exact(a, b)
        assert path.pairs == ((1, 1), (1, 2), (1, 3), (2, 4))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            dtw_exact(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dtw_exact(np.zeros((0, 2)), np.zeros((3, 2)))

    @given(
        a=st.lists(st.floats(-5, 5), min_size=1, max_size=6),
        b=st.lists(st.floats(-5, 5), min_size=1, max_size=6),
    )
    @settings(max_examples=80, deadline=None)
    def test_cost_oracle_property(self, a, b):
        got = dtw_exact(a, b)
        want = oracle_dtw_cost(a, b)
        assert got.total_cost == pytest.approx(want, rel=1e-9, abs=1e-12)


class TestFast:
    def test_full_radius_equals_exact(self):
        rng = np.random.default_rng(3)
        for _ in range(60):
            n, m = int(rng.integers(1, 33)), int(rng.integers(1, 33))
            a = rng.normal(size=(n, 2))
            b = rng.normal(size=(m, 2))
            exact = dtw_exact(a, b)
            fast = dtw_fast(a, b, radius=max(n, m))
            assert fast.pairs == exact.pairs
            assert fast.total_cost == pytest.approx(exact.total_cost, rel=1e-12)

    def test_default_radius_near_diagonal_inputs(self):
        # slowly drifting pair: the true alignment hugs the diagonal, so a
        # radius-1 window already contains it
        t = np.linspace(0, 2 * np.pi, 48)
        a = np.column_stack([np.cos(t), np.sin(t)])
        b = a + 0.01
        exact = dtw_exact(a, b)
        fast = dtw_fast(a, b, radius=1)
        assert fast.total_cost == pytest.approx(exact.total_cost, rel=1e-9)

    def test_fast_cost_never_below_exact(self):
        rng = np.random.default_rng(13)
        for _ in range(40):
            a = rng.normal(size=(int(rng.integers(4, 40)), 2))
            b = rng.normal(size=(int(rng.integers(4, 40)), 2))
            exact = dtw_exact(a, b).total_cost
            fast = dtw_fast(a, b, radius=1).total_cost
            assert fast >= exact - 1e-12

    def test_fast_path_structurally_valid_and_attains_cost(self):
        rng = np.random.default_rng(15)
        for _ in range(40):
            a = rng.normal(size=(int(rng.integers(1, 50)), 3))
            b = rng.normal(size=(int(rng.integers(1, 50)), 3))
            path = dtw_fast(a, b, radius=2)
            assert path.pairs[0] == (1, 1)
            assert path.pairs[-1] == (a.shape[0], b.shape[0])
            assert path_cost(a, b, path.pairs) == pytest.approx(path.total_cost, rel=1e-12)

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            dtw_fast(np.zeros((3, 1)), np.zeros((3, 1)), radius=-1)


class TestFirstOccurrence:
    def test_known_map(self):
        path = WarpingPath(pairs=((1, 1), (2, 1), (3, 2), (3, 3)), total_cost=0.0)
        assert first_occurrence_map(path) == {1: 1, 2: 1, 3: 2}

    def test_covers_every_i_and_is_monotone(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            a = rng.normal(size=(int(rng.integers(1, 20)), 2))
            b = rng.normal(size=(int(rng.integers(1, 20)), 2))
            path = dtw_exact(a, b)
            fo = first_occurrence_map(path)
            assert sorted(fo) == list(range(1, a.shape[0] + 1))
            js = [fo[i] for i in sorted(fo)]
            assert all(j1 <= j2 for j1, j2 in zip(js, js[1:]))


class TestCostMatrix:
    def test_corner_is_total_cost(self):
        rng = np.random.default_rng(27)
        a = rng.normal(size=(6, 2))
        b = rng.normal(size=(9, 2))
        D = accumulated_cost_matrix(a, b)
        assert D[-1, -1] == pytest.approx(dtw_exact(a, b).total_cost, rel=1e-12)

    def test_monotone_along_first_row_and_column(self):
        a = np.ones((4, 1))
        b = np.zeros((5, 1))
        D = accumulated_cost_matrix(a, b)
        assert np.all(np.diff(D[0]) >= 0)
        assert np.all(np.diff(D[:, 0]) >= 0)
