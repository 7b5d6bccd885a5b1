"""Top-down SVG rendering of an episode trace."""

from __future__ import annotations

import math

from ..geometry import OccupancyGrid
from ..world import GOAL_TOLERANCE
from .trace import Trace

SCALE = 60.0  # px per m
MARGIN = 10.0  # px
SNAPSHOT_OPACITY = (0.35, 0.65, 1.0)
ROBOT_SIZE = (0.5, 0.4)  # m, footprint drawn as a rectangle


def _f(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def snapshot_indices(n_rows: int) -> list:
    return [round(k * (n_rows - 1) / 2) for k in range(3)]


def rebuild_grid(meta: dict) -> OccupancyGrid | None:
    if "size" not in meta:
        return None
    w, h = meta["size"]
    grid = OccupancyGrid.from_extent(w, h, meta.get("resolution", 0.05))
    if meta.get("border"):
        grid.fill_border()
    for ob in meta.get("obstacles", []):
        if ob[0] == "rect":
            grid.fill_rect(*ob[1:])
        else:
            grid.fill_polyline([tuple(p) for p in ob[2]], ob[1])
    return grid


def _heading(trace: Trace, i: int, k: int) -> float:
    peds = trace.ped_xy()
    j0, j1 = max(i - 1, 0), min(i + 1, len(trace) - 1)
    d = peds[j1, k] - peds[j0, k]
    return math.atan2(d[1], d[0]) if (d[0] or d[1]) else 0.0


def plot_episode(trace: Trace) -> str:
    """SVG document for ``trace``; identical traces give identical bytes."""
    if len(trace) == 0:
        raise ValueError("cannot plot an empty trace")
    meta = trace.meta
    rows = trace.rows
    if "size" in meta:
        width_m, height_m = meta["size"]
    else:
        xy = trace.robot_xy()
        width_m = float(xy[:, 0].max()) + 1.0
        height_m = float(xy[:, 1].max()) + 1.0
    W = width_m * SCALE + 2 * MARGIN
    H = height_m * SCALE + 2 * MARGIN

    def px(x, y):
        return MARGIN + x * SCALE, MARGIN + (height_m - y) * SCALE

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(W)}" height="{_f(H)}" '
        f'viewBox="0 0 {_f(W)} {_f(H)}">',
        f'<rect x="0" y="0" width="{_f(W)}" height="{_f(H)}" fill="white"/>',
    ]

    grid = rebuild_grid(meta)
    if grid is not None:
        out.append('<g id="obstacles" fill="#555555">')
        res = grid.resolution
        for r in range(grid.height):
            c = 0
            while c < grid.width:
                if not grid.cells[r, c]:
                    c += 1
                    continue
                c0 = c
                while c < grid.width and grid.cells[r, c]:
                    c += 1
                x0 = grid.origin.x + c0 * res
                y1 = grid.origin.y + (r + 1) * res
                sx, sy = px(x0, y1)
                out.append(f'<rect x="{_f(sx)}" y="{_f(sy)}" width="{_f((c - c0) * res * SCALE)}" '
                           f'height="{_f(res * SCALE)}"/>')
        out.append('</g>')

    if meta.get("global_path"):
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (px(*p) for p in meta["global_path"]))
        out.append(f'<polyline id="global-path" points="{pts}" fill="none" stroke="#999999" '
                   f'stroke-width="1.5" stroke-dasharray="6 4"/>')

    pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in (px(x, y) for x, y in trace.robot_xy()))
    out.append(f'<polyline id="robot-path" points="{pts}" fill="none" stroke="#d62728" stroke-width="1.5"/>')

    if "goal" in meta:
        gx, gy = px(*meta["goal"])
        out.append(f'<circle id="goal" cx="{_f(gx)}" cy="{_f(gy)}" r="{_f(GOAL_TOLERANCE * SCALE)}" '
                   f'fill="#2ca02c" fill-opacity="0.6" stroke="#2ca02c"/>')

    radii = meta.get("ped_radii", [0.35] * trace.n_peds)
    lw, lh = ROBOT_SIZE[0] * SCALE, ROBOT_SIZE[1] * SCALE
    for label, (i, alpha) in enumerate(zip(snapshot_indices(len(rows)), SNAPSHOT_OPACITY), 1):
        out.append(f'<g id="snapshot-{label}" opacity="{_f(alpha)}">')
        for k in range(trace.n_peds):
            x, y = rows[i, 6 + 2 * k], rows[i, 7 + 2 * k]
            cx, cy = px(x, y)
            rad = radii[k] * SCALE
            deg = -math.degrees(_heading(trace, i, k))
            out.append(f'<ellipse class="pedestrian" cx="{_f(cx)}" cy="{_f(cy)}" rx="{_f(rad * 0.7)}" '
                       f'ry="{_f(rad)}" transform="rotate({_f(deg)} {_f(cx)} {_f(cy)})" fill="#1f77b4"/>')
            out.append(f'<text x="{_f(cx)}" y="{_f(cy + 4)}" font-size="11" text-anchor="middle" '
                       f'fill="white">{label}</text>')
        x, y, th = rows[i, 1], rows[i, 2], rows[i, 3]
        cx, cy = px(x, y)
        deg = -math.degrees(th)
        out.append(f'<rect class="robot" x="{_f(cx - lw / 2)}" y="{_f(cy - lh / 2)}" width="{_f(lw)}" '
                   f'height="{_f(lh)}" transform="rotate({_f(deg)} {_f(cx)} {_f(cy)})" fill="#d62728"/>')
        out.append(f'<text class="robot-label" x="{_f(cx)}" y="{_f(cy + 4)}" font-size="11" '
                   f'text-anchor="middle" fill="white">{label}</text>')
        out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
