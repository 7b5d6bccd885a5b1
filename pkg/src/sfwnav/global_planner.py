"""A* global path over the inflated occupancy grid and the moving local waypoint."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .geometry import OccupancyGrid, Pose2D

SQRT2 = math.sqrt(2.0)
DEFAULT_INFLATION = 0.30  # robot radius 0.25 m + 0.05 m margin

# (dx, dy, is_diagonal), expansion order fixed for deterministic tie-breaking
_MOVES = (
    (1, 0, False), (0, 1, False), (-1, 0, False), (0, -1, False),
    (1, 1, True), (-1, 1, True), (-1, -1, True), (1, -1, True),
)


class UnreachableError(RuntimeError):
    """No collision-free grid path exists between start and goal."""


@dataclass
class GlobalPath:
    waypoints: np.ndarray  # (N, 2) m
    total_length: float
    n_straight: int = 0
    n_diagonal: int = 0
    resolution: float = 1.0

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float).reshape(-1, 2)
        seg = np.diff(self.waypoints, axis=0)
        self._seg_len = np.hypot(seg[:, 0], seg[:, 1])
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_len)])

    @property
    def grid_cost(self) -> float:
        """Search cost in meters (unit straight steps, sqrt(2) diagonals)."""
        return (self.n_straight + self.n_diagonal * SQRT2) * self.resolution

    @property
    def arc_lengths(self) -> np.ndarray:
        return self._cum

    def project(self, px: float, py: float) -> float:
        """Arc length of the path point closest to ``(px, py)``."""
        wp = self.waypoints
        if len(wp) == 1:
            return 0.0
        a = wp[:-1]
        d = wp[1:] - a
        L2 = self._seg_len ** 2
        t = ((px - a[:, 0]) * d[:, 0] + (py - a[:, 1]) * d[:, 1]) / np.where(L2 > 0, L2, 1.0)
        t = np.clip(np.where(L2 > 0, t, 0.0), 0.0, 1.0)
        qx = a[:, 0] + t * d[:, 0]
        qy = a[:, 1] + t * d[:, 1]
        dist = np.hypot(qx - px, qy - py)
        k = int(np.argmin(dist))
        return float(self._cum[k] + t[k] * self._seg_len[k])

    def point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self._cum[-1])
        return np.array([np.interp(s, self._cum, self.waypoints[:, 0]),
                         np.interp(s, self._cum, self.waypoints[:, 1])])


def _octile(ax, ay, bx, by):
    dx, dy = abs(ax - bx), abs(ay - by)
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def astar_cells(blocked: np.ndarray, start: tuple[int, int], goal: tuple[int, int]):
    """8-connected A* over a boolean mask; returns the list of (ix, iy) cells.

    Diagonal moves may not cut between two blocked orthogonal neighbours.
    Raises :class:`UnreachableError` when the goal cannot be reached.
    """
    h, w = blocked.shape
    sx, sy = start
    gx, gy = goal
    for cx, cy in (start, goal):
        if not (0 <= cx < w and 0 <= cy < h) or blocked[cy, cx]:
            raise UnreachableError(f"cell {(cx, cy)} is blocked or outside the grid")
    g = {start: 0.0}
    parent = {start: None}
    counter = 0
    open_heap = [(_octile(sx, sy, gx, gy), counter, start)]
    closed = set()
    while open_heap:
        _, _, cur = heapq.heappop(open_heap)
        if cur in closed:
            continue
        if cur == goal:
            break
        closed.add(cur)
        cx, cy = cur
        gc = g[cur]
        for dx, dy, diag in _MOVES:
            nx, ny = cx + dx, cy + dy
            if not (0 <= nx < w and 0 <= ny < h) or blocked[ny, nx]:
                continue
            if diag and (blocked[cy, nx] or blocked[ny, cx]):
                continue
            nxt = (nx, ny)
            if nxt in closed:
                continue
            cand = gc + (SQRT2 if diag else 1.0)
            if cand < g.get(nxt, math.inf):
                g[nxt] = cand
                parent[nxt] = cur
                counter += 1
                heapq.heappush(open_heap, (cand + _octile(nx, ny, gx, gy), counter, nxt))
    else:
        raise UnreachableError(f"no path from {start} to {goal}")
    cells = []
    node = goal
    while node is not None:
        cells.append(node)
        node = parent[node]
    cells.reverse()
    return cells


def plan_global(grid: OccupancyGrid, start, goal, inflation: float = DEFAULT_INFLATION) -> GlobalPath:
    """Shortest 8-connected path from ``start`` to ``goal`` on the inflated grid.

    Waypoints are the exact start, the visited cell centers, then the exact
    goal; start and goal lie in their end cells, so every gap stays within
    one cell diagonal.
    """
    blocked = grid.inflated(inflation)
    s_cell = grid.world_to_cell(start[0], start[1])
    g_cell = grid.world_to_cell(goal[0], goal[1])
    cells = astar_cells(blocked, s_cell, g_cell)
    n_diag = sum(1 for a, b in zip(cells[:-1], cells[1:]) if a[0] != b[0] and a[1] != b[1])
    n_straight = len(cells) - 1 - n_diag
    centers = [grid.cell_center(ix, iy) for ix, iy in cells]
    pts = np.array([tuple(start[:2])] + centers + [tuple(goal[:2])], dtype=float)
    seg = np.diff(pts, axis=0)
    length = float(np.hypot(seg[:, 0], seg[:, 1]).sum())
    return GlobalPath(pts, length, n_straight, n_diag, grid.resolution)


def local_waypoint(path: GlobalPath, robot: Pose2D, lookahead: float = 2.0) -> np.ndarray:
    """Point ``lookahead`` meters further along the path than the robot's projection.

    Near the end of the path this is simply the final goal.
    """
    s = path.project(robot.x, robot.y)
    return path.point_at(s + lookahead)
