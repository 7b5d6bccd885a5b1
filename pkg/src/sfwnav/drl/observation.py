"""Agent state vector and the weight action space."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..controller import CostWeights
from ..geometry import LIDAR_MAX_RANGE, LIDAR_RAYS, normalize_angle
from ..global_planner import GlobalPath, local_waypoint

K_PEOPLE = 4
PEOPLE_RANGE = 5.0  # m
PERSON_PADDING = (0.0, PEOPLE_RANGE, 0.0, 0.0)
OBS_DIM = 2 + 5 + 4 * K_PEOPLE + LIDAR_RAYS  # 59

# Order of the action vector and of the previous-weights block.
ACTION_ORDER = ("w_d", "w_h", "w_v", "w_o", "w_s")
ACTION_DIM = len(ACTION_ORDER)


@dataclass(frozen=True)
class ActionSpec:
    """Closed interval per weight, in ``ACTION_ORDER``."""

    low: tuple = (0.1, 0.1, 0.1, 0.5, 0.5)
    high: tuple = (1.5, 1.0, 1.0, 3.0, 3.0)

    @classmethod
    def uniform(cls, lo: float = 0.1, hi: float = 5.0) -> ActionSpec:
        return cls((lo,) * ACTION_DIM, (hi,) * ACTION_DIM)

    @property
    def low_array(self) -> np.ndarray:
        return np.array(self.low, dtype=float)

    @property
    def high_array(self) -> np.ndarray:
        return np.array(self.high, dtype=float)

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.low_array + self.high_array)

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.high_array - self.low_array)

    def contains(self, action) -> bool:
        a = np.asarray(action, dtype=float)
        return bool(np.all(a >= self.low_array) and np.all(a <= self.high_array))

    def from_unit(self, a_unit) -> np.ndarray:
        """Map ``[-1, 1]`` per dimension onto the intervals."""
        a = self.midpoint + self.half_width * np.asarray(a_unit, dtype=float)
        return np.clip(a, self.low_array, self.high_array)

    def to_unit(self, action) -> np.ndarray:
        return np.clip((np.asarray(action, dtype=float) - self.midpoint) / self.half_width, -1.0, 1.0)


def weights_from_action(action) -> CostWeights:
    w_d, w_h, w_v, w_o, w_s = (float(x) for x in action)
    return CostWeights(w_s=w_s, w_o=w_o, w_v=w_v, w_d=w_d, w_h=w_h)


def action_from_weights(w: CostWeights) -> np.ndarray:
    return np.array([w.w_d, w.w_h, w.w_v, w.w_o, w.w_s], dtype=float)


def people_features(robot, pedestrians) -> np.ndarray:
    """Nearest ``K_PEOPLE`` people within range as (angle, distance, speed, heading)."""
    seen = []
    for p in pedestrians:
        lx, ly = robot.to_local(p.position[0], p.position[1])
        dist = math.hypot(lx, ly)
        if dist > PEOPLE_RANGE:
            continue
        speed = math.hypot(p.velocity[0], p.velocity[1])
        heading = normalize_angle(math.atan2(p.velocity[1], p.velocity[0]) - robot.theta) if speed > 0 else 0.0
        seen.append((dist, p.id, math.atan2(ly, lx), speed, heading))
    seen.sort(key=lambda s: (s[0], s[1]))
    out = np.tile(np.array(PERSON_PADDING), K_PEOPLE)
    for k, (dist, _, ang, speed, heading) in enumerate(seen[:K_PEOPLE]):
        out[4 * k:4 * k + 4] = ang, dist, speed, heading
    return out


def build_observation(world, prev_weights: CostWeights, path: GlobalPath | None = None,
                      waypoint=None, scan=None, lookahead: float = 2.0) -> np.ndarray:
    """The 59-value state: goal polar (2), previous weights (5), people (16), LiDAR (36)."""
    robot = world.robot
    if waypoint is None:
        waypoint = local_waypoint(path, robot, lookahead)
    lx, ly = robot.to_local(float(waypoint[0]), float(waypoint[1]))
    goal = [math.atan2(ly, lx), math.hypot(lx, ly)]
    ranges = world.scan() if scan is None else np.asarray(scan, dtype=float)
    obs = np.concatenate([
        goal,
        action_from_weights(prev_weights),
        people_features(robot, world.pedestrians),
        np.clip(ranges, 0.0, LIDAR_MAX_RANGE),
    ])
    assert obs.shape == (OBS_DIM,)
    return obs


# Fixed input scaling for the networks; brings every feature to roughly unit range.
OBS_SCALE = np.concatenate([
    [math.pi, 2.0],
    [3.0] * 5,
    np.tile([math.pi, PEOPLE_RANGE, 1.0, math.pi], K_PEOPLE),
    [LIDAR_MAX_RANGE] * LIDAR_RAYS,
])
