"""Episode wrapper exposing observation, reward and done at the 2 Hz agent rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..controller import SFW_WEIGHTS, ControllerParams, CostWeights
from ..episode import Episode
from ..world import COLLISION, Scenario, get_scenario
from .observation import ActionSpec, build_observation, weights_from_action
from .reward import RewardBreakdown, RewardCoefficients, reward


def nearest_center_distance(world) -> float:
    r = world.robot
    best = math.inf
    for p in world.pedestrians:
        best = min(best, math.hypot(p.position[0] - r.x, p.position[1] - r.y))
    return best


@dataclass
class StepResult:
    obs: np.ndarray
    reward: RewardBreakdown
    done: bool
    status: str


class WeightEnv:
    """Weights in, shaped reward out. ``reset`` picks a seeded scenario instance."""

    def __init__(self, scenario: Scenario | str, grid=None, params: ControllerParams | None = None,
                 spec: ActionSpec | None = None, coef: RewardCoefficients | None = None,
                 initial_weights: CostWeights = SFW_WEIGHTS):
        if isinstance(scenario, str):
            scenario, grid = get_scenario(scenario)
        self.scenario = scenario
        self.grid = grid if grid is not None else scenario.build_grid()
        self.params = params or ControllerParams()
        self.spec = spec or ActionSpec()
        self.coef = coef or RewardCoefficients()
        self.initial_weights = initial_weights
        self.episode: Episode | None = None
        self.prev_weights = initial_weights

    def reset(self, seed: int) -> np.ndarray:
        self.episode = Episode(self.scenario.instance(seed), self.grid, self.params)
        self.prev_weights = self.initial_weights
        return self.observe()

    def observe(self, scan=None) -> np.ndarray:
        ep = self.episode
        return build_observation(ep.world, self.prev_weights, ep.path, waypoint=ep.waypoint(), scan=scan)

    def step(self, action) -> StepResult:
        """``action`` holds the five weights in ``ACTION_ORDER`` (already in range)."""
        ep = self.episode
        weights = weights_from_action(action)
        before = ep.world.robot
        info = ep.advance(weights)
        world = ep.world
        scan = world.scan()
        r = reward(before, world.robot, info.waypoint, world.state.command.v, scan,
                   nearest_center_distance(world), info.social_work, world.status == COLLISION,
                   self.params.v_max, self.coef)
        self.prev_weights = weights
        return StepResult(self.observe(scan), r, ep.done, ep.status)
