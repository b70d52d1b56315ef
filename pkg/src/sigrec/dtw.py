"""Dynamic time warping with squared-Euclidean step costs.

Two routes to the same quantity: `dtw_exact` fills the full accumulated
cost matrix, `dtw_fast` recursively coarsens both sequences, warps the
half-resolution pair, and refines inside a window of the projected path
(radius cells on each side).  With a radius at least as large as both
sequence lengths the fast route degenerates to the exact one.

Indices in returned paths are 1-based; pair (i, j) aligns the i-th element
of the first sequence with the j-th of the second.  Ties in the backtrack
are broken deterministically: prefer the diagonal move, then the move that
advanced the second sequence, then the one that advanced the first.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["WarpingPath", "dtw_exact", "dtw_fast", "first_occurrence_map", "accumulated_cost_matrix"]


@dataclass(frozen=True)
class WarpingPath:
    """Monotone alignment between two sequences.

    pairs are 1-based (i, j) tuples from (1, 1) to (n, m); total_cost is the
    sum of squared Euclidean distances over the aligned pairs.
    """

    pairs: tuple[tuple[int, int], ...]
    total_cost: float

    def __len__(self):
        return len(self.pairs)


def _as_sequence(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty (n, d) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def _check_pair_dims(a: np.ndarray, b: np.ndarray):
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"sequences disagree in dimension: {a.shape[1]} vs {b.shape[1]}")


def _validate_path(pairs, n: int, m: int):
    """Structural sanity: endpoints, monotone non-decreasing, unit steps."""
    assert pairs[0] == (1, 1), f"path must start at (1, 1), got {pairs[0]}"
    assert pairs[-1] == (n, m), f"path must end at ({n}, {m}), got {pairs[-1]}"
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        di, dj = i1 - i0, j1 - j0
        assert (di, dj) in ((0, 1), (1, 0), (1, 1)), f"illegal step {(di, dj)}"


def accumulated_cost_matrix(a, b) -> np.ndarray:
    """Full accumulated cost matrix; exposed for debugging dumps."""
    A = _as_sequence(a, "a")
    B = _as_sequence(b, "b")
    _check_pair_dims(A, B)
    cost = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    n, m = cost.shape
    D = np.empty_like(cost)
    D[0, 0] = cost[0, 0]
    for j in range(1, m):
        D[0, j] = D[0, j - 1] + cost[0, j]
    for i in range(1, n):
        D[i, 0] = D[i - 1, 0] + cost[i, 0]
        row = D[i]
        prev = D[i - 1]
        for j in range(1, m):
            row[j] = cost[i, j] + min(prev[j - 1], prev[j], row[j - 1])
    return D


def _backtrack_dense(D: np.ndarray) -> list[tuple[int, int]]:
    n, m = D.shape
    i, j = n - 1, m - 1
    rev = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, left, up = D[i - 1, j - 1], D[i, j - 1], D[i - 1, j]
            best = min(diag, left, up)
            # preference on ties: diagonal, then the predecessor whose move
            # advanced j, then the one that advanced i
            if diag == best:
                i, j = i - 1, j - 1
            elif left == best:
                j -= 1
            else:
                i -= 1
        rev.append((i, j))
    rev.reverse()
    return rev


def dtw_exact(a, b) -> WarpingPath:
    """Optimal warping path by full dynamic programming.

    Parameters
    ----------
    a, b : array_like, shapes (n, d) and (m, d)
        Sequences to align; 1-D inputs are treated as scalar sequences.

    Returns
    -------
    WarpingPath
        Deterministic optimal path with its accumulated squared cost.
    """
    A = _as_sequence(a, "a")
    B = _as_sequence(b, "b")
    _check_pair_dims(A, B)
    D = accumulated_cost_matrix(A, B)
    zero_based = _backtrack_dense(D)
    pairs = tuple((i + 1, j + 1) for i, j in zero_based)
    if __debug__:
        _validate_path(pairs, A.shape[0], B.shape[0])
    return WarpingPath(pairs=pairs, total_cost=float(D[-1, -1]))


def _reduce_by_half(x: np.ndarray) -> np.ndarray:
    half = x.shape[0] // 2
    return (x[0 : 2 * half : 2] + x[1 : 2 * half : 2]) / 2.0


def _expand_window(low_pairs, n: int, m: int, radius: int) -> set[tuple[int, int]]:
    """Project a half-resolution path up and widen it by `radius` cells."""
    padded = set()
    for i, j in low_pairs:
        for di in range(-radius, radius + 1):
            for dj in range(-radius, radius + 1):
                padded.add((i + di, j + dj))
    raw = set()
    for i, j in padded:
        for cell in ((2 * i, 2 * j), (2 * i, 2 * j + 1), (2 * i + 1, 2 * j), (2 * i + 1, 2 * j + 1)):
            raw.add(cell)
    # keep each row contiguous so the dynamic program stays connected
    window = set()
    start_j = 0
    for i in range(n):
        new_start = None
        for j in range(start_j, m):
            if (i, j) in raw:
                window.add((i, j))
                if new_start is None:
                    new_start = j
            elif new_start is not None:
                break
        if new_start is not None:
            start_j = new_start
    window.add((0, 0))
    window.add((n - 1, m - 1))
    return window


def _windowed_dtw(A: np.ndarray, B: np.ndarray, window) -> WarpingPath:
    n, m = A.shape[0], B.shape[0]
    INF = np.inf
    D: dict[tuple[int, int], float] = {}
    for i, j in sorted(window):
        c = float(np.sum((A[i] - B[j]) ** 2))
        if i == 0 and j == 0:
            D[i, j] = c
            continue
        best = min(
            D.get((i - 1, j - 1), INF),
            D.get((i - 1, j), INF),
            D.get((i, j - 1), INF),
        )
        D[i, j] = c + best
    i, j = n - 1, m - 1
    rev = [(i, j)]
    while i > 0 or j > 0:
        diag = D.get((i - 1, j - 1), INF) if i > 0 and j > 0 else INF
        left = D.get((i, j - 1), INF) if j > 0 else INF
        up = D.get((i - 1, j), INF) if i > 0 else INF
        best = min(diag, left, up)
        if diag == best:
            i, j = i - 1, j - 1
        elif left == best:
            j -= 1
        else:
            i -= 1
        rev.append((i, j))
    rev.reverse()
    pairs = tuple((pi + 1, pj + 1) for pi, pj in rev)
    if __debug__:
        _validate_path(pairs, n, m)
    return WarpingPath(pairs=pairs, total_cost=float(D[n - 1, m - 1]))


def dtw_fast(a, b, radius: int = 1) -> WarpingPath:
    """Coarsen-project-refine warping in the style of FastDTW.

    Parameters
    ----------
    a, b : array_like
        Sequences to align.
    radius : int, default 1
        Half-width of the refinement window around the projected path.
        radius >= max(len(a), len(b)) reproduces `dtw_exact` exactly.
    """
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    A = _as_sequence(a, "a")
    B = _as_sequence(b, "b")
    _check_pair_dims(A, B)
    return _fast_rec(A, B, radius)


def _fast_rec(A: np.ndarray, B: np.ndarray, radius: int) -> WarpingPath:
    min_size = radius + 2
    if A.shape[0] <= min_size or B.shape[0] <= min_size:
        return dtw_exact(A, B)
    shrunk = _fast_rec(_reduce_by_half(A), _reduce_by_half(B), radius)
    low_pairs = [(i - 1, j - 1) for i, j in shrunk.pairs]
    window = _expand_window(low_pairs, A.shape[0], B.shape[0], radius)
    return _windowed_dtw(A, B, window)


def first_occurrence_map(path: WarpingPath) -> dict[int, int]:
    """Smallest aligned j for every i in the path (1-based on both sides)."""
    out: dict[int, int] = {}
    for i, j in path.pairs:
        out.setdefault(i, j)
    return out
