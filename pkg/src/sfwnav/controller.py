"""Social Force Window local planner.

A Dynamic Window Approach planner whose trajectory score carries one extra
term: the social work the robot would generate along each rollout. Every
cost term is normalized to [0, 1] before weighting. Setting ``w_s = 0``
reproduces plain DWA exactly.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, field, replace

import numpy as np

from .geometry import OccupancyGrid, Pose2D, VelocityCommand, integrate_unicycle, normalize_angles
from .sfm import SfmParams, social_work_batch

COST_NAMES = ("C_s", "C_o", "C_v", "C_d", "C_h")


@dataclass(frozen=True)
class CostWeights:
    w_s: float = 2.0
    w_o: float = 2.0
    w_v: float = 0.8
    w_d: float = 1.0
    w_h: float = 0.6

    def __post_init__(self):
        if min(astuple(self)) < 0:
            raise ValueError("cost weights must be non-negative")

    def as_array(self) -> np.ndarray:
        """Weights in cost-term order ``(w_s, w_o, w_v, w_d, w_h)``."""
        return np.array(astuple(self), dtype=float)

    def scaled(self, k: float) -> CostWeights:
        return CostWeights(*(k * w for w in astuple(self)))


SFW_WEIGHTS = CostWeights()
DWA_WEIGHTS = replace(SFW_WEIGHTS, w_s=0.0)


@dataclass
class ControllerParams:
    v_max: float = 0.6  # m/s
    v_min: float = 0.08  # m/s
    w_max: float = 1.5  # rad/s
    sim_time: float = 2.5  # s
    rollout_dt: float = 0.1  # s
    waypoint_lookahead: float = 2.0  # m
    accel_v: float = 1.0  # m/s^2
    accel_w: float = 2.0  # rad/s^2
    control_dt: float = 0.1  # s
    window_dt: float = 0.5  # s, reachability horizon of the dynamic window
    n_v_samples: int = 10
    n_w_samples: int = 20
    robot_radius: float = 0.25  # m
    inflation_range: float = 0.55  # m of clearance where C_o reaches 0
    social_norm: float = 50.0

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError("v_min must be below v_max")
        if not self.sim_time > self.control_dt:
            raise ValueError("sim_time must exceed control_dt")

    @property
    def n_rollout_steps(self) -> int:
        return int(round(self.sim_time / self.rollout_dt))


@dataclass
class Snapshot:
    """Frozen view of the world used for one command selection."""

    grid: OccupancyGrid | None
    waypoint: np.ndarray
    ped_pos: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ped_vel: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ped_radius: np.ndarray = field(default_factory=lambda: np.zeros(0))
    sfm: SfmParams = field(default_factory=SfmParams)

    def __post_init__(self):
        self.waypoint = np.asarray(self.waypoint, dtype=float)
        self.ped_pos = np.asarray(self.ped_pos, dtype=float).reshape(-1, 2)
        self.ped_vel = np.asarray(self.ped_vel, dtype=float).reshape(-1, 2)
        self.ped_radius = np.broadcast_to(np.asarray(self.ped_radius, dtype=float), (len(self.ped_pos),))


@dataclass
class Trajectory:
    command: VelocityCommand
    poses: np.ndarray  # (K + 1, 3) x, y, theta
    costs: tuple  # (C_s, C_o, C_v, C_d, C_h)
    total: float  # math.inf when infeasible

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.total)


@dataclass
class CandidateSet:
    commands: np.ndarray  # (N, 2)
    poses: np.ndarray  # (N, K + 1, 3)
    costs: np.ndarray  # (N, 5)
    totals: np.ndarray  # (N,)

    def __len__(self):
        return len(self.commands)

    def __getitem__(self, i) -> Trajectory:
        v, w = self.commands[i]
        return Trajectory(VelocityCommand(float(v), float(w)), self.poses[i],
                          tuple(float(c) for c in self.costs[i]), float(self.totals[i]))


@dataclass
class Selection:
    command: VelocityCommand
    best: Trajectory
    candidates: CandidateSet
    recovery: bool = False


def dynamic_window(current: VelocityCommand, p: ControllerParams, dt: float | None = None) -> np.ndarray:
    """Uniform ``n_v x n_w`` grid of reachable commands, v-major order."""
    dt = p.window_dt if dt is None else dt
    v_lo = max(p.v_min, current.v - p.accel_v * dt)
    v_hi = min(p.v_max, current.v + p.accel_v * dt)
    w_lo = max(-p.w_max, current.w - p.accel_w * dt)
    w_hi = min(p.w_max, current.w + p.accel_w * dt)
    v_hi = max(v_hi, v_lo)
    w_hi = max(w_hi, w_lo)
    vs = np.linspace(v_lo, v_hi, p.n_v_samples)
    ws = np.linspace(w_lo, w_hi, p.n_w_samples)
    vv, ww = np.meshgrid(vs, ws, indexing="ij")
    return np.stack([vv.ravel(), ww.ravel()], axis=1)


def rollout_batch(commands, start: Pose2D, p: ControllerParams) -> np.ndarray:
    cmds = np.asarray(commands, dtype=float).reshape(-1, 2)
    t = np.arange(p.n_rollout_steps + 1) * p.rollout_dt
    v = cmds[:, 0:1]
    w = cmds[:, 1:2]
    x, y, th = integrate_unicycle(start.x, start.y, start.theta, v, w, t[None, :])
    return np.stack([x, y, th], axis=-1)


def rollout(cmd: VelocityCommand, start: Pose2D, p: ControllerParams) -> np.ndarray:
    """Poses along the constant ``(v, w)`` arc, start included."""
    return rollout_batch([[cmd.v, cmd.w]], start, p)[0]


def evaluate(commands, poses, snapshot: Snapshot, weights: CostWeights, p: ControllerParams,
             social: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Component costs ``(N, 5)`` and weighted totals ``(N,)`` for a batch of rollouts.

    With ``social=False`` the social term is never computed (C_s reported as
    0) and left out of the sum, i.e. the plain DWA scorer.
    """
    cmds = np.asarray(commands, dtype=float).reshape(-1, 2)
    poses = np.asarray(poses, dtype=float)
    n, k1 = poses.shape[:2]
    pts = poses[:, 1:, :2]
    t = np.arange(1, k1) * p.rollout_dt

    if snapshot.grid is not None:
        clearance, closest = snapshot.grid.nearest_obstacle(pts)
    else:
        clearance = np.full(pts.shape[:2], np.inf)
        closest = pts + 1e6
    infeasible = (clearance < p.robot_radius).any(axis=1)

    ped_pred = snapshot.ped_pos[None, :, :] + t[:, None, None] * snapshot.ped_vel[None, :, :]
    if len(snapshot.ped_pos):
        gap = np.hypot(pts[:, :, None, 0] - ped_pred[None, :, :, 0], pts[:, :, None, 1] - ped_pred[None, :, :, 1])
        infeasible |= (gap < p.robot_radius + snapshot.ped_radius).any(axis=(1, 2))

    c_o = np.clip(1.0 - (clearance - p.robot_radius) / p.inflation_range, 0.0, 1.0).max(axis=1)
    c_v = (p.v_max - cmds[:, 0]) / p.v_max
    end = poses[:, -1]
    dx = snapshot.waypoint[0] - end[:, 0]
    dy = snapshot.waypoint[1] - end[:, 1]
    dist = np.hypot(dx, dy)
    c_d = np.minimum(1.0, dist / p.waypoint_lookahead)
    herr = np.abs(normalize_angles(np.arctan2(dy, dx) - end[:, 2]))
    c_h = np.where(dist < 1e-9, 0.0, herr / math.pi)

    if social:
        heading = poses[:, 1:, 2]
        vel = cmds[:, 0, None, None] * np.stack([np.cos(heading), np.sin(heading)], axis=-1)
        work = social_work_batch(pts, vel, p.robot_radius,
                                 np.broadcast_to(ped_pred, (n,) + ped_pred.shape),
                                 snapshot.ped_vel, snapshot.ped_radius, closest, snapshot.sfm)
        c_s = np.minimum(1.0, work.sum(axis=1) / p.social_norm)
        total = (weights.w_s * c_s + weights.w_o * c_o + weights.w_v * c_v
                 + weights.w_d * c_d + weights.w_h * c_h)
    else:
        c_s = np.zeros(n)
        total = weights.w_o * c_o + weights.w_v * c_v + weights.w_d * c_d + weights.w_h * c_h

    total = np.where(infeasible, np.inf, total)
    return np.stack([c_s, c_o, c_v, c_d, c_h], axis=1), total


def score_trajectory(poses, cmd: VelocityCommand, snapshot: Snapshot, weights: CostWeights,
                     p: ControllerParams, social: bool = True) -> Trajectory:
    costs, total = evaluate([[cmd.v, cmd.w]], np.asarray(poses)[None], snapshot, weights, p, social)
    return Trajectory(cmd, np.asarray(poses), tuple(float(c) for c in costs[0]), float(total[0]))


def best_index(commands, totals) -> int | None:
    """Index of the minimum finite total; ties go to higher v, then smaller |w|,
    then earlier sample. ``None`` if nothing is feasible."""
    totals = np.asarray(totals)
    if not np.isfinite(totals).any():
        return None
    cmds = np.asarray(commands)
    order = np.lexsort((np.arange(len(totals)), np.abs(cmds[:, 1]), -cmds[:, 0], totals))
    return int(order[0])


def recovery_command(p: ControllerParams) -> VelocityCommand:
    return VelocityCommand(0.0, 0.5 * p.w_max)


def select_command(window, start: Pose2D, snapshot: Snapshot, weights: CostWeights,
                   p: ControllerParams, social: bool = True) -> Selection:
    window = np.asarray(window, dtype=float).reshape(-1, 2)
    poses = rollout_batch(window, start, p)
    costs, totals = evaluate(window, poses, snapshot, weights, p, social)
    cands = CandidateSet(window, poses, costs, totals)
    i = best_index(window, totals)
    if i is None:
        cmd = recovery_command(p)
        best = score_trajectory(rollout(cmd, start, p), cmd, snapshot, weights, p, social)
        return Selection(cmd, best, cands, recovery=True)
    return Selection(cands[i].command, cands[i], cands)


class SFWController:
    """Stateful wrapper: remembers the last command to center the next window.

    ``social=False`` gives a build with the social term removed entirely,
    which must behave identically to ``weights.w_s == 0``.
    """

    def __init__(self, params: ControllerParams | None = None, weights: CostWeights = SFW_WEIGHTS,
                 social: bool = True):
        self.params = params or ControllerParams()
        self.weights = weights
        self.social = social
        self.last_command = VelocityCommand(0.0, 0.0)
        self.last_selection: Selection | None = None

    def reset(self):
        self.last_command = VelocityCommand(0.0, 0.0)
        self.last_selection = None

    def compute(self, pose: Pose2D, snapshot: Snapshot) -> VelocityCommand:
        window = dynamic_window(self.last_command, self.params)
        sel = select_command(window, pose, snapshot, self.weights, self.params, self.social)
        self.last_selection = sel
        self.last_command = sel.command
        return sel.command
