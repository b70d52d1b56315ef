"""Grid-world trajectory sampling and the on-disk trajectory format.

A recognizer needs a library of plausible paths toward each candidate
goal.  This module builds one on an occupancy grid: the shortest
8-connected path (unit straight steps, sqrt(2) diagonals, no corner
cutting) plus seeded detour variants through random waypoints, all
expressed as cell-center states ready for signature computation.

Grids load from the plain-text map format used by the grid-based
pathfinding benchmark collections: a four-line header (type, height,
width, map) followed by one character per cell, where '.', 'G' and 'S'
are traversable and '@', 'O', 'T', 'W' are not.

Trajectory sets round-trip through a line-oriented text file that
preserves float64 values exactly (`repr` printing, see save/load below).
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridMap",
    "SampleRequest",
    "SamplerError",
    "astar_path",
    "load_trajectories",
    "path_cost",
    "sample_k_trajectories",
    "save_trajectories",
]

PASSABLE = frozenset(".GS")
BLOCKED = frozenset("@OTW")

SQRT2 = math.sqrt(2.0)


class SamplerError(RuntimeError):
    """Sampling could not satisfy the request (bad cells, unreachable
    goals, or not enough distinct variants)."""


@dataclass(frozen=True)
class GridMap:
    """Occupancy grid; `blocked[y, x]` is True on untraversable cells."""

    blocked: np.ndarray

    def __post_init__(self):
        blocked = np.asarray(self.blocked, dtype=bool)
        if blocked.ndim != 2 or blocked.size == 0:
            raise ValueError(f"blocked must be a non-empty 2-D array, got shape {blocked.shape}")
        object.__setattr__(self, "blocked", blocked)

    @property
    def height(self) -> int:
        return self.blocked.shape[0]

    @property
    def width(self) -> int:
        return self.blocked.shape[1]

    @classmethod
    def empty(cls, width: int, height: int) -> "GridMap":
        return cls(np.zeros((height, width), dtype=bool))

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, x: int, y: int) -> bool:
        return self.in_bounds(x, y) and not self.blocked[y, x]

    def cell_center(self, x: int, y: int) -> np.ndarray:
        """Continuous state anchored at the middle of cell (x, y)."""
        return np.array([x + 0.5, y + 0.5], dtype=np.float64)

    def passable_cells(self) -> np.ndarray:
        """(n, 2) int array of (x, y) for every traversable cell, row-major."""
        ys, xs = np.nonzero(~self.blocked)
        return np.stack([xs, ys], axis=1)

    @classmethod
    def parse(cls, text: str) -> "GridMap":
        lines = text.splitlines()
        header: dict[str, str] = {}
        row_start = None
        for i, line in enumerate(lines):
            token = line.strip()
            if token == "map":
                row_start = i + 1
                break
            if not token:
                continue
            parts = token.split(None, 1)
            if len(parts) != 2:
                raise SamplerError(f"line {i + 1}: malformed header line {line!r}")
            header[parts[0].lower()] = parts[1]
        if row_start is None:
            raise SamplerError("missing 'map' header line")
        try:
            height = int(header["height"])
            width = int(header["width"])
        except KeyError as exc:
            raise SamplerError(f"missing {exc.args[0]!r} header line") from None
        except ValueError:
            raise SamplerError("height and width must be integers") from None
        if height <= 0 or width <= 0:
            raise SamplerError(f"bad grid size {width}x{height}")
        rows = [line for line in lines[row_start:] if line.strip()]
        if len(rows) != height:
            raise SamplerError(f"expected {height} map rows, found {len(rows)}")
        blocked = np.zeros((height, width), dtype=bool)
        for y, row in enumerate(rows):
            row = row.rstrip("\n")
            if len(row) != width:
                raise SamplerError(
                    f"line {row_start + y + 1}: row has {len(row)} cells, expected {width}"
                )
            for x, ch in enumerate(row):
                if ch in BLOCKED:
                    blocked[y, x] = True
                elif ch not in PASSABLE:
                    raise SamplerError(f"line {row_start + y + 1}: unknown cell character {ch!r}")
        return cls(blocked)

    @classmethod
    def load(cls, path) -> "GridMap":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())


def _octile(a, b) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def astar_path(grid: GridMap, start, goal) -> tuple[list[tuple[int, int]], float]:
    """Shortest 8-connected path between cells, as (cells, cost).

    Diagonal steps are forbidden when either orthogonal neighbour is
    blocked.  Ties are resolved deterministically (insertion order), so
    identical inputs always give the identical path.  Raises SamplerError
    for bad endpoints or an unreachable goal.
    """
    start, goal = (int(start[0]), int(start[1])), (int(goal[0]), int(goal[1]))
    for name, cell in (("start", start), ("goal", goal)):
        if not grid.passable(*cell):
            raise SamplerError(f"{name} cell {cell} is blocked or out of bounds")
    if start == goal:
        return [start], 0.0

    counter = 0
    open_heap = [(_octile(start, goal), 0, start)]
    g_score = {start: 0.0}
    came: dict = {}
    closed = set()
    while open_heap:
        _, _, cell = heapq.heappop(open_heap)
        if cell in closed:
            continue
        if cell == goal:
            path = [cell]
            while path[-1] in came:
                path.append(came[path[-1]])
            path.reverse()
            return path, g_score[goal]
        closed.add(cell)
        x, y = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (x + dx, y + dy)
                if not grid.passable(*nxt):
                    continue
                if dx != 0 and dy != 0 and not (
                    grid.passable(x + dx, y) and grid.passable(x, y + dy)
                ):
                    continue
                step = SQRT2 if dx != 0 and dy != 0 else 1.0
                cand = g_score[cell] + step
                if cand < g_score.get(nxt, math.inf) - 1e-12:
                    g_score[nxt] = cand
                    came[nxt] = cell
                    counter += 1
                    heapq.heappush(open_heap, (cand + _octile(nxt, goal), counter, nxt))
    raise SamplerError(f"goal {goal} is unreachable from {start}")


def path_cost(cells) -> float:
    """Grid cost of a cell path: 1 per straight step, sqrt(2) per diagonal."""
    total = 0.0
    for a, b in zip(cells, cells[1:]):
        dx, dy = abs(b[0] - a[0]), abs(b[1] - a[1])
        if max(dx, dy) != 1:
            raise ValueError(f"cells {a} -> {b} are not 8-adjacent")
        total += SQRT2 if dx == 1 and dy == 1 else 1.0
    return total


def _smooth(points: np.ndarray, grid: GridMap) -> np.ndarray:
    """Round interior corners without changing point count or cells.

    Each interior point moves toward the local average only if it stays
    inside its original cell, so collision checks reduce to the cells the
    path already occupies.  Endpoints are never moved: the final state
    must remain the exact goal anchor.
    """
    out = points.copy()
    for i in range(1, len(points) - 1):
        cand = 0.25 * points[i - 1] + 0.5 * points[i] + 0.25 * points[i + 1]
        if np.floor(cand).astype(int).tolist() == np.floor(points[i]).astype(int).tolist():
            out[i] = cand
    return out


@dataclass(frozen=True)
class SampleRequest:
    """Inputs for one goal's trajectory batch."""

    start: tuple
    goal_cell: tuple
    k: int = 1
    spread: float = 0.5
    smooth: bool = True
    max_attempts: int = 200

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}")
        if self.spread < 0:
            raise ValueError(f"spread must be non-negative, got {self.spread}")


def sample_k_trajectories(grid: GridMap, request: SampleRequest, rng=None) -> list[np.ndarray]:
    """K distinct cell-center trajectories from start to one goal.

    The first trajectory follows the shortest path exactly; the rest
    detour through random waypoints, keeping total grid cost within
    (1 + spread) of the optimum and visiting the goal cell only as the
    final point.  `rng` seeds the waypoint draw (int, Generator, or None).
    Raises SamplerError when fewer than k distinct variants exist within
    the attempt budget, reporting how many were found.
    """
    rng = np.random.default_rng(rng)
    base_cells, base_cost = astar_path(grid, request.start, request.goal_cell)
    accepted = [base_cells]
    seen = {tuple(base_cells)}
    budget = request.max_attempts
    candidates = grid.passable_cells()
    goal = (int(request.goal_cell[0]), int(request.goal_cell[1]))
    start = (int(request.start[0]), int(request.start[1]))
    while len(accepted) < request.k and budget > 0:
        budget -= 1
        wx, wy = candidates[int(rng.integers(len(candidates)))]
        waypoint = (int(wx), int(wy))
        if waypoint in (start, goal):
            continue
        try:
            first, c1 = astar_path(grid, start, waypoint)
            second, c2 = astar_path(grid, waypoint, goal)
        except SamplerError:
            continue
        cells = first + second[1:]
        if c1 + c2 > (1.0 + request.spread) * base_cost + 1e-12:
            continue
        if goal in cells[:-1]:
            continue
        key = tuple(cells)
        if key in seen:
            continue
        seen.add(key)
        accepted.append(cells)
    if len(accepted) < request.k:
        raise SamplerError(
            f"found {len(accepted)} of {request.k} distinct trajectories to "
            f"{goal} within {request.max_attempts} attempts; raise spread or "
            f"max_attempts"
        )
    out = []
    for cells in accepted:
        pts = np.stack([grid.cell_center(x, y) for x, y in cells])
        out.append(_smooth(pts, grid) if request.smooth else pts)
    return out


# ------------------------------------------------------------------ file format


def _check_goal_token(goal: str):
    if not goal or any(c.isspace() for c in goal) or "," in goal:
        raise ValueError(f"goal id {goal!r} must be non-empty without whitespace or commas")


def save_trajectories(path, trajectories) -> None:
    """Write (points, goal) pairs to a line-oriented text file.

    Layout: `d <dimension>` and `count <n>` headers, then per trajectory a
    `traj <goal> <points>` line followed by one whitespace-separated row
    per point.  Floats are printed with `repr`, so loading reproduces the
    arrays bit for bit.
    """
    items = [(np.asarray(p, dtype=np.float64), str(g)) for p, g in trajectories]
    if not items:
        raise ValueError("refusing to save an empty trajectory set")
    dim = items[0][0].shape[1]
    lines = [f"d {dim}", f"count {len(items)}"]
    for pts, goal in items:
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise ValueError(f"trajectory for {goal!r} must be (n>=2, d), got {pts.shape}")
        if pts.shape[1] != dim:
            raise ValueError(
                f"trajectory for {goal!r} has dimension {pts.shape[1]}, expected {dim}"
            )
        _check_goal_token(goal)
        lines.append(f"traj {goal} {pts.shape[0]}")
        for row in pts:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trajectories(path) -> list[tuple[np.ndarray, str]]:
    """Inverse of save_trajectories; errors carry 1-based line numbers.

    An empty file is accepted with a warning and yields an empty list.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = raw.splitlines()
    if not any(line.strip() for line in lines):
        warnings.warn(f"trajectory file {path} is empty", stacklevel=2)
        return []

    def fail(lineno: int, msg: str):
        raise ValueError(f"line {lineno}: {msg}")

    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines) and not lines[pos].strip():
            pos += 1
        if pos >= len(lines):
            fail(len(lines), "unexpected end of file")
        pos += 1
        return pos, lines[pos - 1].strip()

    lineno, head = next_line()
    if not head.startswith("d "):
        fail(lineno, f"expected 'd <dimension>', got {head!r}")
    try:
        dim = int(head[2:])
    except ValueError:
        fail(lineno, f"bad dimension {head[2:]!r}")
    lineno, head = next_line()
    if not head.startswith("count "):
        fail(lineno, f"expected 'count <n>', got {head!r}")
    try:
        count = int(head.split()[1])
    except (IndexError, ValueError):
        fail(lineno, f"bad count in {head!r}")

    out: list[tuple[np.ndarray, str]] = []
    for _ in range(count):
        lineno, head = next_line()
        parts = head.split()
        if len(parts) != 3 or parts[0] != "traj":
            fail(lineno, f"expected 'traj <goal> <points>', got {head!r}")
        goal = parts[1]
        try:
            npts = int(parts[2])
        except ValueError:
            fail(lineno, f"bad point count {parts[2]!r}")
        if npts < 2:
            fail(lineno, f"trajectory needs at least 2 points, declared {npts}")
        rows = np.empty((npts, dim), dtype=np.float64)
        for r in range(npts):
            lineno, row = next_line()
            vals = row.split()
            if len(vals) != dim:
                fail(lineno, f"point has {len(vals)} coordinates, expected {dim}")
            try:
                rows[r] = [float(v) for v in vals]
            except ValueError:
                fail(lineno, f"non-numeric coordinate in {row!r}")
        out.append((rows, goal))
    while pos < len(lines):
        if lines[pos].strip():
            fail(pos + 1, f"trailing content {lines[pos].strip()!r}")
        pos += 1
    return out
