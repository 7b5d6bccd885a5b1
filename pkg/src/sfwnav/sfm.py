"""Social Force Model: pedestrian dynamics and the robot's social work.

Pairwise interaction follows Moussaid et al. (2009): an interaction vector
built from relative velocity and bearing sets the range of an exponential
repulsion with a deceleration part along the interaction direction and an
evasion part along its normal. Obstacles repel with a Helbing-style
exponential of the surface distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import OccupancyGrid

_EPS = 1e-12
_FALLBACK = np.array([1.0, 0.0])

WAYPOINT_TOLERANCE = 0.3  # m
MAX_SPEED_FACTOR = 1.5


@dataclass
class SfmParams:
    A: float = 4.5
    lam: float = 2.0
    gamma: float = 0.35
    n: float = 2.0
    n_prime: float = 3.0
    A_obs: float = 10.0
    B_obs: float = 0.1  # m
    tau: float = 0.5  # s
    dt: float = 0.05  # s

    def __post_init__(self):
        if self.tau <= 0 or self.dt <= 0 or self.B_obs <= 0 or self.gamma <= 0:
            raise ValueError("tau, dt, B_obs and gamma must be positive")


@dataclass
class SfmAgent:
    """A disc-shaped agent walking through an ordered list of waypoints.

    An empty waypoint list (or a finished non-looping one) means the agent
    has nowhere to go and only relaxes its velocity toward zero.
    """

    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))
    desired_speed: float = 0.9
    radius: float = 0.35
    waypoints: list = field(default_factory=list)
    waypoint_index: int = 0
    loop: bool = False
    id: int = 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.desired_speed < 0:
            raise ValueError("desired_speed must be non-negative")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def goal(self) -> np.ndarray | None:
        if self.waypoint_index < len(self.waypoints):
            return np.asarray(self.waypoints[self.waypoint_index], dtype=float)
        return None


@dataclass
class ForceBreakdown:
    goal_force: np.ndarray
    obstacle_force: np.ndarray
    social_force: np.ndarray
    per_agent_social: list  # [(agent id, force vector)]


@dataclass
class SocialWorkAccumulator:
    w_r: float = 0.0
    w_p_per_pedestrian: list = field(default_factory=list)
    steps: int = 0

    def add(self, w_r_increment: float, w_p_increments):
        if not self.w_p_per_pedestrian:
            self.w_p_per_pedestrian = [0.0] * len(w_p_increments)
        elif len(w_p_increments) != len(self.w_p_per_pedestrian):
            raise ValueError("pedestrian count changed mid-episode")
        self.w_r += w_r_increment
        for i, inc in enumerate(w_p_increments):
            self.w_p_per_pedestrian[i] += inc
        self.steps += 1

    @property
    def total(self) -> float:
        total = self.w_r
        for w in self.w_p_per_pedestrian:
            total += w
        return total


# -- force laws --------------------------------------------------------------


def goal_force(agent: SfmAgent, relaxation_time: float = 0.5, goal=None) -> np.ndarray:
    if relaxation_time <= 0:
        raise ValueError("relaxation_time must be positive")
    target = agent.goal if goal is None else np.asarray(goal, dtype=float)
    desired = np.zeros(2)
    if target is not None:
        to_goal = target - agent.position
        dist = math.hypot(to_goal[0], to_goal[1])
        if dist >= 1e-9:
            desired = agent.desired_speed * to_goal / dist
    return (desired - agent.velocity) / relaxation_time


def social_forces(p_self, v_self, p_other, v_other, params: SfmParams, contact=0.0) -> np.ndarray:
    """Vectorized pairwise interaction force on ``self`` due to ``other``.

    All arguments broadcast over leading dimensions with a trailing axis of 2.
    The range term uses the surface gap ``max(d - contact, 0)`` where
    ``contact`` is the sum of radii, so the magnitude saturates at contact.
    Coincident positions use +x as the bearing, so the result stays finite.
    """
    diff = np.asarray(p_other, dtype=float) - np.asarray(p_self, dtype=float)
    d = np.hypot(diff[..., 0], diff[..., 1])
    coincident = d < _EPS
    if coincident.any():
        e = np.where(coincident[..., None], _FALLBACK, diff / np.where(coincident, 1.0, d)[..., None])
    else:
        e = diff / d[..., None]

    D = params.lam * (np.asarray(v_self, dtype=float) - np.asarray(v_other, dtype=float)) + e
    L = np.hypot(D[..., 0], D[..., 1])
    degenerate = L < _EPS
    if degenerate.any():
        D_hat = np.where(degenerate[..., None], e, D / np.where(degenerate, 1.0, L)[..., None])
        L = np.where(degenerate, _EPS, L)
    else:
        D_hat = D / L[..., None]
    dx, dy = D_hat[..., 0], D_hat[..., 1]
    ex, ey = e[..., 0], e[..., 1]

    # signed angle from the interaction direction to the bearing of the other agent
    theta = np.arctan2(dx * ey - dy * ex, dx * ex + dy * ey)
    B = params.gamma * L
    g = -np.maximum(d - contact, 0.0) / B
    decel = -np.exp(g - (params.n_prime * B * theta) ** 2)
    evade = -np.sign(theta) * np.exp(g - (params.n * B * theta) ** 2)
    # evade acts along the left normal (-dy, dx) of the interaction direction
    return params.A * np.stack([decel * dx + evade * -dy, decel * dy + evade * dx], axis=-1)


def social_force_between(agent: SfmAgent, other: SfmAgent, params: SfmParams | None = None) -> np.ndarray:
    """Repulsion felt by ``agent`` from ``other``."""
    params = params or SfmParams()
    return social_forces(agent.position, agent.velocity, other.position, other.velocity, params,
                         agent.radius + other.radius)


def obstacle_forces(positions, radii, obstacle_points, params: SfmParams) -> np.ndarray:
    """Vectorized exponential repulsion from the closest obstacle points."""
    diff = np.asarray(positions, dtype=float) - np.asarray(obstacle_points, dtype=float)
    d = np.hypot(diff[..., 0], diff[..., 1])
    touching = d < _EPS
    direction = np.where(touching[..., None], _FALLBACK, diff / np.where(touching, 1.0, d)[..., None])
    mag = params.A_obs * np.exp((np.asarray(radii) - d) / params.B_obs)
    return mag[..., None] * direction


def obstacle_force(agent: SfmAgent, nearest_obstacle_point, params: SfmParams | None = None) -> np.ndarray:
    params = params or SfmParams()
    return obstacle_forces(agent.position, agent.radius, nearest_obstacle_point, params)


# -- robot bookkeeping ---------------------------------------------------------


def robot_breakdown(robot: SfmAgent, pedestrians, grid: OccupancyGrid | None,
                    params: SfmParams) -> tuple[ForceBreakdown, list]:
    """Forces acting on the robot plus the forces it exerts on each pedestrian.

    The robot's goal force is reported as zero: the planner never integrates
    robot dynamics, so only the social and obstacle forces count.
    """
    per_agent = []
    on_peds = []
    total = np.zeros(2)
    for ped in pedestrians:
        contact = robot.radius + ped.radius
        f = social_forces(robot.position, robot.velocity, ped.position, ped.velocity, params, contact)
        per_agent.append((ped.id, f))
        total = total + f
        on_peds.append(social_forces(ped.position, ped.velocity, robot.position, robot.velocity, params,
                                     contact))
    if grid is not None:
        _, q = grid.nearest_obstacle(robot.position[None, :])
        f_obs = obstacle_forces(robot.position, robot.radius, q[0], params)
    else:
        f_obs = np.zeros(2)
    return ForceBreakdown(np.zeros(2), f_obs, total, per_agent), on_peds


def social_work_step(robot_breakdown: ForceBreakdown, robot_as_seen_by_pedestrians) -> tuple[float, list]:
    """Per-sample social work increments ``(|F_P| + |F_O|, [|f_i|])``."""
    b = robot_breakdown
    w_r = math.hypot(*b.social_force) + math.hypot(*b.obstacle_force)
    w_p = [math.hypot(f[0], f[1]) for f in robot_as_seen_by_pedestrians]
    return w_r, w_p


def social_work_batch(robot_pos, robot_vel, robot_radius, ped_pos, ped_vel, ped_radius,
                      obstacle_points, params: SfmParams) -> np.ndarray:
    """Social work of many robot samples at once.

    ``robot_pos``/``robot_vel``/``obstacle_points`` have shape ``(..., 2)``;
    ``ped_pos``/``ped_vel`` have shape ``(..., P, 2)`` and ``ped_radius`` ``(P,)``. Returns
    ``|F_P| + |F_O| + sum_i |f_i|`` per sample.
    """
    robot_pos = np.asarray(robot_pos, dtype=float)
    f_obs = obstacle_forces(robot_pos, robot_radius, obstacle_points, params)
    work = np.hypot(f_obs[..., 0], f_obs[..., 1])
    ped_pos = np.asarray(ped_pos, dtype=float)
    if ped_pos.shape[-2] == 0:
        return work
    rp = robot_pos[..., None, :]
    rv = np.asarray(robot_vel, dtype=float)[..., None, :]
    contact = robot_radius + np.asarray(ped_radius, dtype=float)
    on_robot = social_forces(rp, rv, ped_pos, ped_vel, params, contact)
    by_robot = social_forces(ped_pos, ped_vel, rp, rv, params, contact)
    f_p = on_robot.sum(axis=-2)
    work = work + np.hypot(f_p[..., 0], f_p[..., 1])
    return work + np.hypot(by_robot[..., 0], by_robot[..., 1]).sum(axis=-1)


# -- pedestrian stepping -------------------------------------------------------


def step_pedestrians(agents, grid: OccupancyGrid | None, robot: SfmAgent | None,
                     dt: float | None = None, params: SfmParams | None = None) -> list:
    """Advance every pedestrian one explicit Euler step.

    Forces are evaluated on the pre-step state for all agents, so the update
    does not depend on list order. ``robot`` (position + velocity) is felt as
    one more social repulsor.
    """
    params = params or SfmParams()
    dt = params.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be positive")
    if not agents:
        return []
    pos = np.array([a.position for a in agents])
    vel = np.array([a.velocity for a in agents])
    radii = np.array([a.radius for a in agents])
    forces = np.array([goal_force(a, params.tau) for a in agents])

    n = len(agents)
    if n > 1:
        pair = social_forces(pos[:, None, :], vel[:, None, :], pos[None, :, :], vel[None, :, :], params,
                             radii[:, None] + radii[None, :])
        pair[np.arange(n), np.arange(n)] = 0.0
        forces += pair.sum(axis=1)
    if grid is not None:
        _, q = grid.nearest_obstacle(pos)
        forces += obstacle_forces(pos, radii, q, params)
    if robot is not None:
        forces += social_forces(pos, vel, robot.position, robot.velocity, params, radii + robot.radius)

    out = []
    for a, f in zip(agents, forces):
        v = a.velocity + f * dt
        speed = math.hypot(v[0], v[1])
        cap = MAX_SPEED_FACTOR * a.desired_speed
        if speed > cap:
            v = v * (cap / speed) if speed > 0 else np.zeros(2)
        p = a.position + v * dt
        idx = a.waypoint_index
        goal = a.goal
        if goal is not None and math.hypot(goal[0] - p[0], goal[1] - p[1]) < WAYPOINT_TOLERANCE:
            idx += 1
            if idx >= len(a.waypoints) and a.loop:
                idx = 0
        out.append(replace(a, position=p, velocity=v, waypoint_index=idx))
    return out
