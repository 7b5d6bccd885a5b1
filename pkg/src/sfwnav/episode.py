"""Closed-loop episode at nested cadences: physics 20 Hz, planner 10 Hz, weights 2 Hz."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import ControllerParams, CostWeights, SFWController, Snapshot
from .geometry import OccupancyGrid, VelocityCommand
from .global_planner import GlobalPath, local_waypoint, plan_global
from .sfm import SocialWorkAccumulator, robot_breakdown, social_work_step
from .world import RUNNING, Scenario, World

PHYSICS_PER_CONTROL = 2
CONTROL_PER_AGENT = 5

# Surface-distance upper bounds of the proxemics zones (m); beyond is public.
PROXEMICS_BOUNDS = (0.45, 1.2, 3.6)
ZONES = ("intimate", "personal", "social", "public")


def proxemics_zone(surface_distance: float) -> int:
    for i, bound in enumerate(PROXEMICS_BOUNDS):
        if surface_distance < bound:
            return i
    return 3


def nearest_person_distance(world: World) -> float:
    """Smallest robot-to-person surface distance, ``inf`` with nobody around."""
    r = world.robot
    best = math.inf
    for p in world.pedestrians:
        d = math.hypot(p.position[0] - r.x, p.position[1] - r.y) - world.robot_radius - p.radius
        best = min(best, d)
    return best


@dataclass
class AgentStepInfo:
    social_work: float  # summed over the control ticks of this agent step
    control_steps: int
    waypoint: np.ndarray  # local waypoint held during the step


@dataclass
class Episode:
    """One navigation episode driven by externally supplied cost weights.

    Call :meth:`advance` with the weights to hold for one agent period
    (0.5 s); it runs the planner and physics and keeps the trace and
    metric bookkeeping up to date.
    """

    scenario: Scenario
    grid: OccupancyGrid
    params: ControllerParams = field(default_factory=ControllerParams)
    social: bool = True

    def __post_init__(self):
        self.world = World(self.scenario, self.grid)
        s = self.scenario.robot_start
        self.path: GlobalPath = plan_global(self.grid, (s.x, s.y), self.scenario.goal)
        self.controller = SFWController(self.params, social=self.social)
        self.sw = SocialWorkAccumulator()
        self.zone_counts = [0, 0, 0, 0]
        self.path_length = 0.0
        self.trace = [self._trace_row()]
        self.commands: list[VelocityCommand] = []

    @property
    def status(self) -> str:
        return self.world.status

    @property
    def done(self) -> bool:
        return self.world.status != RUNNING

    @property
    def control_steps(self) -> int:
        return self.sw.steps

    def waypoint(self) -> np.ndarray:
        return local_waypoint(self.path, self.world.robot, self.params.waypoint_lookahead)

    def snapshot(self, waypoint) -> Snapshot:
        pos, vel, rad = self.world.pedestrian_arrays()
        return Snapshot(self.grid, waypoint, pos, vel, rad, self.scenario.sfm)

    def _trace_row(self) -> list:
        s = self.world.state
        row = [s.time, s.robot.x, s.robot.y, s.robot.theta, s.command.v, s.command.w]
        for p in s.pedestrians:
            row += [float(p.position[0]), float(p.position[1])]
        return row

    def _control_tick(self, weights: CostWeights, waypoint) -> float:
        w = self.world
        breakdown, on_peds = robot_breakdown(w.robot_agent(), w.pedestrians, self.grid, self.scenario.sfm)
        w_r, w_p = social_work_step(breakdown, on_peds)
        self.sw.add(w_r, w_p)
        self.zone_counts[proxemics_zone(nearest_person_distance(w))] += 1
        self.controller.weights = weights
        cmd = self.controller.compute(w.robot, self.snapshot(waypoint))
        self.commands.append(cmd)
        return w_r + sum(w_p)

    def advance(self, weights: CostWeights) -> AgentStepInfo:
        # waypoint and weights are held for the whole agent period
        waypoint = self.waypoint()
        work = 0.0
        ticks = 0
        cmd = self.controller.last_command
        for i in range(PHYSICS_PER_CONTROL * CONTROL_PER_AGENT):
            if self.done:
                break
            if i % PHYSICS_PER_CONTROL == 0:
                work += self._control_tick(weights, self.waypoint())
                cmd = self.controller.last_command
                ticks += 1
            before = self.world.robot
            self.world.step(cmd)
            after = self.world.robot
            self.path_length += math.hypot(after.x - before.x, after.y - before.y)
            self.trace.append(self._trace_row())
        return AgentStepInfo(work, ticks, waypoint)

    def proxemics_fractions(self) -> tuple:
        n = sum(self.zone_counts)
        if n == 0:
            return (0.0, 0.0, 0.0, 1.0)
        return tuple(c / n for c in self.zone_counts)
