"""Planar poses, binary occupancy grids and exact grid ray casting."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

TWO_PI = 2.0 * math.pi

LIDAR_RAYS = 36
LIDAR_MAX_RANGE = 3.0  # m


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"cannot normalize non-finite angle {a!r}")
    r = math.fmod(a, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    elif r > math.pi:
        r -= TWO_PI
    return r


def normalize_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized :func:`normalize_angle` (no finiteness check)."""
    r = np.fmod(a, TWO_PI)
    r = np.where(r <= -math.pi, r + TWO_PI, r)
    return np.where(r > math.pi, r - TWO_PI, r)


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def compose(self, other: Pose2D) -> Pose2D:
        """Apply ``other`` expressed in this pose's frame."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2D(
            self.x + c * other.x - s * other.y,
            self.y + s * other.x + c * other.y,
            self.theta + other.theta,
        )

    def to_local(self, px: float, py: float) -> tuple[float, float]:
        """Express a world point in this pose's frame."""
        dx, dy = px - self.x, py - self.y
        c, s = math.cos(self.theta), math.sin(self.theta)
        return c * dx + s * dy, -s * dx + c * dy

    def distance_to(self, px: float, py: float) -> float:
        return math.hypot(px - self.x, py - self.y)


@dataclass(frozen=True)
class VelocityCommand:
    v: float = 0.0  # m/s
    w: float = 0.0  # rad/s

    def clamped(self, v_max: float, w_max: float) -> VelocityCommand:
        return VelocityCommand(min(max(self.v, 0.0), v_max), min(max(self.w, -w_max), w_max))


def integrate_unicycle(x, y, theta, v, w, t):
    """Closed-form pose after driving ``(v, w)`` for ``t`` seconds.

    Works on scalars or broadcastable arrays. Near-zero turn rates fall back
    to the straight-line solution.
    """
    w = np.asarray(w, dtype=float)
    straight = np.abs(w) < 1e-6
    w_safe = np.where(straight, 1.0, w)
    th1 = theta + w * t
    arc_x = x + v / w_safe * (np.sin(th1) - np.sin(theta))
    arc_y = y - v / w_safe * (np.cos(th1) - np.cos(theta))
    lin_x = x + v * t * np.cos(theta)
    lin_y = y + v * t * np.sin(theta)
    return (
        np.where(straight, lin_x, arc_x),
        np.where(straight, lin_y, arc_y),
        normalize_angles(th1),
    )


class OccupancyGrid:
    """Binary occupancy grid with its lower-left corner at ``origin``.

    ``cells[iy, ix]`` is True for occupied cells. Anything outside the grid
    counts as occupied.
    """

    def __init__(self, width: int, height: int, resolution: float = 0.05, origin=(0.0, 0.0)):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        if width <= 0 or height <= 0:
            raise ValueError("grid needs at least one cell")
        self.resolution = float(resolution)
        self.width = int(width)
        self.height = int(height)
        self.origin = Pose2D(float(origin[0]), float(origin[1]), 0.0)
        self.cells = np.zeros((self.height, self.width), dtype=bool)

    @classmethod
    def from_extent(cls, size_x: float, size_y: float, resolution: float = 0.05, origin=(0.0, 0.0)):
        nx = int(round(size_x / resolution))
        ny = int(round(size_y / resolution))
        return cls(nx, ny, resolution, origin)

    @classmethod
    def from_array(cls, cells, resolution: float = 0.05, origin=(0.0, 0.0)):
        cells = np.asarray(cells, dtype=bool)
        grid = cls(cells.shape[1], cells.shape[0], resolution, origin)
        grid.cells[:] = cells
        return grid

    @property
    def size(self) -> tuple[float, float]:
        return self.width * self.resolution, self.height * self.resolution

    # -- indexing ---------------------------------------------------------

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        return (
            math.floor((x - self.origin.x) / self.resolution),
            math.floor((y - self.origin.y) / self.resolution),
        )

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin.x + (ix + 0.5) * self.resolution,
            self.origin.y + (iy + 0.5) * self.resolution,
        )

    def in_bounds(self, ix: int, iy: int) -> bool:
        return 0 <= ix < self.width and 0 <= iy < self.height

    def contains(self, x: float, y: float) -> bool:
        return self.in_bounds(*self.world_to_cell(x, y))

    def is_occupied(self, ix: int, iy: int) -> bool:
        if not (0 <= ix < self.width and 0 <= iy < self.height):
            return True
        return bool(self.cells[iy, ix])

    def occupied_at(self, x: float, y: float) -> bool:
        return self.is_occupied(*self.world_to_cell(x, y))

    # -- rasterization ----------------------------------------------------

    def _touch(self):
        self.__dict__.pop("_nearest_table", None)

    def fill_rect(self, x: float, y: float, w: float, h: float):
        """Mark every cell whose center lies in the rectangle as occupied."""
        r = self.resolution
        ix0 = max(0, math.ceil((x - self.origin.x) / r - 0.5 - 1e-9))
        ix1 = min(self.width, math.floor((x + w - self.origin.x) / r - 0.5 + 1e-9) + 1)
        iy0 = max(0, math.ceil((y - self.origin.y) / r - 0.5 - 1e-9))
        iy1 = min(self.height, math.floor((y + h - self.origin.y) / r - 0.5 + 1e-9) + 1)
        if ix1 > ix0 and iy1 > iy0:
            self.cells[iy0:iy1, ix0:ix1] = True
        self._touch()

    def fill_polyline(self, points, thickness: float):
        """Mark cells whose centers are within ``thickness / 2`` of the polyline."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        xs = self.origin.x + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin.y + (np.arange(self.height) + 0.5) * self.resolution
        cx, cy = np.meshgrid(xs, ys)
        half = 0.5 * thickness
        for a, b in zip(pts[:-1], pts[1:]):
            d = b - a
            L2 = float(d @ d)
            if L2 == 0.0:
                t = np.zeros_like(cx)
            else:
                t = np.clip(((cx - a[0]) * d[0] + (cy - a[1]) * d[1]) / L2, 0.0, 1.0)
            dist = np.hypot(cx - (a[0] + t * d[0]), cy - (a[1] + t * d[1]))
            self.cells |= dist <= half + 1e-9
        self._touch()

    def fill_border(self, thickness_cells: int = 1):
        k = thickness_cells
        self.cells[:k, :] = True
        self.cells[-k:, :] = True
        self.cells[:, :k] = True
        self.cells[:, -k:] = True
        self._touch()

    def inflated(self, radius: float) -> np.ndarray:
        """Occupancy mask dilated by ``radius`` (cell-center distance)."""
        if radius <= 0:
            return self.cells.copy()
        padded = np.ones((self.height + 2, self.width + 2), dtype=bool)
        padded[1:-1, 1:-1] = self.cells
        dist = ndimage.distance_transform_edt(~padded)[1:-1, 1:-1] * self.resolution
        return dist <= radius + 1e-9

    # -- distance queries -------------------------------------------------

    @cached_property
    def _nearest_table(self):
        # Padded with an occupied ring so the outside counts as an obstacle.
        padded = np.ones((self.height + 2, self.width + 2), dtype=bool)
        padded[1:-1, 1:-1] = self.cells
        _, (iy, ix) = ndimage.distance_transform_edt(~padded, return_indices=True)
        return iy - 1, ix - 1

    def nearest_obstacle(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Distance from each point to the nearest occupied cell square.

        Returns ``(distance, closest_point)`` with shapes ``(...,)`` and
        ``(..., 2)``. Points inside an occupied cell get distance 0 and are
        their own closest point.
        """
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        p = pts.reshape(-1, 2)
        r = self.resolution
        near_iy, near_ix = self._nearest_table
        cx = np.floor((p[:, 0] - self.origin.x) / r).astype(np.int64)
        cy = np.floor((p[:, 1] - self.origin.y) / r).astype(np.int64)
        best_d = np.full(len(p), np.inf)
        best_q = p.copy()
        outside = (cx < 0) | (cx >= self.width) | (cy < 0) | (cy >= self.height)
        for oy in (-1, 0, 1):
            for ox in (-1, 0, 1):
                jx = np.clip(cx + ox, -1, self.width) + 1
                jy = np.clip(cy + oy, -1, self.height) + 1
                qx = near_ix[jy, jx]
                qy = near_iy[jy, jx]
                x0 = self.origin.x + qx * r
                y0 = self.origin.y + qy * r
                px = np.clip(p[:, 0], x0, x0 + r)
                py = np.clip(p[:, 1], y0, y0 + r)
                d = np.hypot(p[:, 0] - px, p[:, 1] - py)
                better = d < best_d
                best_d = np.where(better, d, best_d)
                best_q[better, 0] = px[better]
                best_q[better, 1] = py[better]
        best_d[outside] = 0.0
        best_q[outside] = p[outside]
        return best_d.reshape(shape), best_q.reshape(shape + (2,))

    def clearance(self, points) -> np.ndarray:
        return self.nearest_obstacle(points)[0]


def raycast(grid: OccupancyGrid, origin, angle: float, max_range: float) -> float:
    """Distance along a ray to the first occupied cell, capped at ``max_range``.

    Walks every cell the ray crosses in order and returns the exact entry
    distance into the first occupied one.
    """
    ox, oy = float(origin[0]), float(origin[1])
    r = grid.resolution
    gx = (ox - grid.origin.x) / r
    gy = (oy - grid.origin.y) / r
    ix, iy = math.floor(gx), math.floor(gy)
    if grid.is_occupied(ix, iy):
        return 0.0
    dx, dy = math.cos(angle), math.sin(angle)
    cells = grid.cells
    w, h = grid.width, grid.height
    inf = math.inf
    if dx > 0:
        step_x, t_max_x, t_dx = 1, (ix + 1 - gx) * r / dx, r / dx
    elif dx < 0:
        step_x, t_max_x, t_dx = -1, (gx - ix) * r / -dx, r / -dx
    else:
        step_x, t_max_x, t_dx = 0, inf, inf
    if dy > 0:
        step_y, t_max_y, t_dy = 1, (iy + 1 - gy) * r / dy, r / dy
    elif dy < 0:
        step_y, t_max_y, t_dy = -1, (gy - iy) * r / -dy, r / -dy
    else:
        step_y, t_max_y, t_dy = 0, inf, inf
    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            ix += step_x
            t_max_x += t_dx
        else:
            t = t_max_y
            iy += step_y
            t_max_y += t_dy
        if t >= max_range:
            return float(max_range)
        if not (0 <= ix < w and 0 <= iy < h) or cells[iy, ix]:
            return t


def scan_angles(n_rays: int = LIDAR_RAYS) -> np.ndarray:
    """Evenly spaced beam angles over the full circle, beam 0 straight ahead."""
    return np.arange(n_rays) * (TWO_PI / n_rays)


def static_scan(grid: OccupancyGrid, pose: Pose2D, n_rays: int = LIDAR_RAYS,
                max_range: float = LIDAR_MAX_RANGE) -> np.ndarray:
    return np.array([
        raycast(grid, (pose.x, pose.y), pose.theta + a, max_range) for a in scan_angles(n_rays)
    ])


def min_obstacle_distance(grid: OccupancyGrid, p, n_rays: int = LIDAR_RAYS,
                          max_range: float = LIDAR_MAX_RANGE) -> float:
    """Smallest range of a full-circle scan taken at ``p``."""
    return float(static_scan(grid, Pose2D(p[0], p[1], 0.0), n_rays, max_range).min())
