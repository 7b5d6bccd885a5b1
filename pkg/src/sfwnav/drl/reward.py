"""Shaped reward for the weight-tuning agent."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..geometry import LIDAR_MAX_RANGE

COLLISION_PENALTY = -400.0
MIN_PERSON_DISTANCE = 0.2  # m, floor for the proxemics term
PERSON_RANGE = 5.0  # m


@dataclass(frozen=True)
class RewardCoefficients:
    c_d: float = 10.0
    c_h: float = 0.4
    c_v: float = 1.0
    c_o: float = 2.0
    c_p: float = 2.0
    c_s: float = 2.5


@dataclass
class RewardBreakdown:
    r_d: float
    r_h: float
    r_v: float
    r_o: float
    r_p: float
    r_s: float
    r_c: float
    total: float


def heading_reward(phi: float) -> float:
    return 1.0 - 2.0 * math.sqrt(abs(phi / math.pi))


def velocity_reward(v: float, v_max: float = 0.6) -> float:
    return (v - v_max) / v_max


def obstacle_reward(d_min: float, lidar_max: float = LIDAR_MAX_RANGE) -> float:
    return (min(d_min, lidar_max) - lidar_max) / lidar_max


def proxemics_penalty(d_person: float) -> float:
    """``1 / d`` with ``d`` floored at 0.2 m; zero when nobody is within 5 m."""
    if not d_person <= PERSON_RANGE:
        return 0.0
    return 1.0 / max(d_person, MIN_PERSON_DISTANCE)


def combine(r_d, r_h, r_v, r_o, r_p, r_s, collided: bool,
            coef: RewardCoefficients = RewardCoefficients()) -> RewardBreakdown:
    r_c = COLLISION_PENALTY if collided else 0.0
    total = (coef.c_d * r_d + coef.c_h * r_h + coef.c_v * r_v + coef.c_o * r_o
             - coef.c_p * r_p - coef.c_s * r_s + r_c)
    return RewardBreakdown(r_d, r_h, r_v, r_o, r_p, r_s, r_c, total)


def reward(prev_robot, robot, waypoint, v: float, scan, d_person: float, social_work: float,
           collided: bool, v_max: float = 0.6,
           coef: RewardCoefficients = RewardCoefficients()) -> RewardBreakdown:
    """Reward for one agent step.

    ``waypoint`` is the local goal held during the step, so ``r_d`` is the
    advance toward one fixed point. ``d_person`` is the nearest center
    distance to a person after the step (``inf`` if none), ``social_work``
    the robot's social work summed over the step's control ticks.
    """
    wx, wy = float(waypoint[0]), float(waypoint[1])
    r_d = math.hypot(wx - prev_robot.x, wy - prev_robot.y) - math.hypot(wx - robot.x, wy - robot.y)
    phi = math.atan2(wy - robot.y, wx - robot.x) - robot.theta
    phi = math.atan2(math.sin(phi), math.cos(phi))
    return combine(r_d, heading_reward(phi), velocity_reward(v, v_max), obstacle_reward(float(min(scan))),
                   proxemics_penalty(d_person), social_work, collided, coef)
