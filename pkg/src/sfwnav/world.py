"""Scenario files, the deterministic episode engine and the scenario library.

Scenario document grammar (one directive per line, ``#`` starts a comment)::

    [scenario]
    name <identifier>
    description <free text>
    [world]
    size <width_m> <height_m>
    resolution <m>                    # default 0.05
    border                            # surround the map with a wall
    rect <x> <y> <w> <h>              # lower-left corner + extent
    polyline <thickness> <x1> <y1> <x2> <y2> ...
    [robot]
    start <x> <y> <theta>
    goal <x> <y>
    [pedestrian]                      # repeat the block per person
    start <x> <y>
    waypoint <x> <y>                  # repeatable, visited in order
    speed <m/s>
    radius <m>
    loop yes|no
    [sfm]                             # any of: A lambda gamma n n_prime A_obs B_obs tau dt
    A 4.5
    [episode]
    max_duration <s>
    jitter <m>                        # per-seed pedestrian start perturbation

Unknown sections or keys are errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .geometry import (LIDAR_MAX_RANGE, LIDAR_RAYS, OccupancyGrid, Pose2D, VelocityCommand,
                       integrate_unicycle, scan_angles, static_scan)
from .sfm import SfmAgent, SfmParams, step_pedestrians

ROBOT_RADIUS = 0.25
PEDESTRIAN_RADIUS = 0.35
GOAL_TOLERANCE = 0.3
PHYSICS_DT = 0.05
V_MAX = 0.6
W_MAX = 1.5

RUNNING, SUCCESS, COLLISION, TIMEOUT = "running", "success", "collision", "timeout"


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


class TerminalStateError(RuntimeError):
    """Attempt to step a finished episode."""


@dataclass
class PedestrianSpec:
    start: tuple
    waypoints: list = field(default_factory=list)
    desired_speed: float = 0.9
    radius: float = PEDESTRIAN_RADIUS
    loop: bool = False


@dataclass
class Scenario:
    name: str
    size: tuple
    robot_start: Pose2D
    goal: tuple
    resolution: float = 0.05
    border: bool = False
    obstacles: list = field(default_factory=list)  # ("rect", x, y, w, h) | ("polyline", t, [(x, y), ...])
    pedestrians: list = field(default_factory=list)
    max_duration: float = 60.0
    jitter: float = 0.0
    sfm: SfmParams = field(default_factory=SfmParams)
    description: str = ""

    def build_grid(self) -> OccupancyGrid:
        grid = OccupancyGrid.from_extent(self.size[0], self.size[1], self.resolution)
        if self.border:
            grid.fill_border()
        for ob in self.obstacles:
            if ob[0] == "rect":
                grid.fill_rect(*ob[1:])
            else:
                grid.fill_polyline(ob[2], ob[1])
        return grid

    def instance(self, seed: int) -> Scenario:
        """Seed-specific variant: pedestrian starts jittered, speeds scaled by U(0.9, 1.1)."""
        rng = np.random.default_rng(seed)
        peds = []
        for ped in self.pedestrians:
            off = rng.uniform(-self.jitter, self.jitter, size=2)
            scale = rng.uniform(0.9, 1.1)
            peds.append(replace(ped, start=(ped.start[0] + off[0], ped.start[1] + off[1]),
                                desired_speed=ped.desired_speed * scale))
        return replace(self, pedestrians=peds)


# -- parsing -----------------------------------------------------------------

_SFM_KEYS = {"A": "A", "lambda": "lam", "gamma": "gamma", "n": "n", "n_prime": "n_prime",
             "A_obs": "A_obs", "B_obs": "B_obs", "tau": "tau", "dt": "dt"}


def _floats(args, n, lineno, key):
    if n is not None and len(args) != n:
        raise ScenarioError(f"line {lineno}: '{key}' expects {n} numbers, got {len(args)}")
    try:
        return [float(a) for a in args]
    except ValueError:
        raise ScenarioError(f"line {lineno}: '{key}' expects numbers") from None


def parse_scenario(text: str) -> Scenario:
    fields: dict = {"obstacles": [], "pedestrians": []}
    sfm: dict = {}
    section = None
    ped = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioError(f"line {lineno}: bad section header {line!r}")
            section = line[1:-1].strip()
            if section not in ("scenario", "world", "robot", "pedestrian", "sfm", "episode"):
                raise ScenarioError(f"line {lineno}: unknown section [{section}]")
            if section == "pedestrian":
                ped = {"waypoints": []}
                fields["pedestrians"].append(ped)
            continue
        key, *args = line.split()
        if section is None:
            raise ScenarioError(f"line {lineno}: '{key}' outside any section")
        if section == "scenario":
            if key == "name" and len(args) == 1:
                fields["name"] = args[0]
            elif key == "description":
                fields["description"] = raw.split("#", 1)[0].strip()[len("description"):].strip()
            else:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [scenario]")
        elif section == "world":
            if key == "size":
                fields["size"] = tuple(_floats(args, 2, lineno, key))
            elif key == "resolution":
                fields["resolution"] = _floats(args, 1, lineno, key)[0]
            elif key == "border":
                if args:
                    raise ScenarioError(f"line {lineno}: 'border' takes no arguments")
                fields["border"] = True
            elif key == "rect":
                x, y, w, h = _floats(args, 4, lineno, key)
                if w <= 0 or h <= 0:
                    raise ScenarioError(f"line {lineno}: rect needs positive extent")
                fields["obstacles"].append(("rect", x, y, w, h))
            elif key == "polyline":
                vals = _floats(args, None, lineno, key)
                if len(vals) < 5 or len(vals) % 2 == 0:
                    raise ScenarioError(f"line {lineno}: polyline needs a thickness and >= 2 points")
                pts = [(vals[i], vals[i + 1]) for i in range(1, len(vals), 2)]
                fields["obstacles"].append(("polyline", vals[0], pts))
            else:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [world]")
        elif section == "robot":
            if key == "start":
                fields["robot_start"] = Pose2D(*_floats(args, 3, lineno, key))
            elif key == "goal":
                fields["goal"] = tuple(_floats(args, 2, lineno, key))
            else:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [robot]")
        elif section == "pedestrian":
            if key == "start":
                ped["start"] = tuple(_floats(args, 2, lineno, key))
            elif key == "waypoint":
                ped["waypoints"].append(tuple(_floats(args, 2, lineno, key)))
            elif key == "speed":
                ped["desired_speed"] = _floats(args, 1, lineno, key)[0]
            elif key == "radius":
                ped["radius"] = _floats(args, 1, lineno, key)[0]
            elif key == "loop":
                if args not in (["yes"], ["no"]):
                    raise ScenarioError(f"line {lineno}: loop must be yes or no")
                ped["loop"] = args[0] == "yes"
            else:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [pedestrian]")
        elif section == "sfm":
            if key not in _SFM_KEYS:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [sfm]")
            sfm[_SFM_KEYS[key]] = _floats(args, 1, lineno, key)[0]
        elif section == "episode":
            if key in ("max_duration", "jitter"):
                fields[key] = _floats(args, 1, lineno, key)[0]
            else:
                raise ScenarioError(f"line {lineno}: unknown key '{key}' in [episode]")

    for req in ("size", "robot_start", "goal"):
        if req not in fields:
            raise ScenarioError(f"missing required field '{req}'")
    peds = []
    for i, p in enumerate(fields["pedestrians"]):
        if "start" not in p:
            raise ScenarioError(f"pedestrian {i} has no start")
        if p.get("desired_speed", 0.9) < 0 or p.get("radius", 1.0) <= 0:
            raise ScenarioError(f"pedestrian {i}: speed must be >= 0 and radius > 0")
        peds.append(PedestrianSpec(**p))
    fields["pedestrians"] = peds
    fields.setdefault("name", "unnamed")
    if fields.get("max_duration", 1.0) <= 0:
        raise ScenarioError("max_duration must be positive")
    try:
        fields["sfm"] = SfmParams(**sfm)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return Scenario(**fields)


def validate(scenario: Scenario, grid: OccupancyGrid):
    def clear(pt, radius, what):
        if not grid.contains(*pt):
            raise ScenarioError(f"{scenario.name}: {what} {pt} lies outside the map")
        if float(grid.clearance(np.asarray(pt, dtype=float))) < radius:
            raise ScenarioError(f"{scenario.name}: {what} {pt} is in collision")

    s = scenario.robot_start
    clear((s.x, s.y), ROBOT_RADIUS, "robot start")
    clear(scenario.goal, ROBOT_RADIUS, "goal")
    for i, p in enumerate(scenario.pedestrians):
        clear(p.start, p.radius, f"pedestrian {i} start")


def load_scenario(text: str) -> tuple[Scenario, OccupancyGrid]:
    scenario = parse_scenario(text)
    grid = scenario.build_grid()
    validate(scenario, grid)
    return scenario, grid


# -- episode engine ------------------------------------------------------------


@dataclass
class WorldState:
    time: float
    robot: Pose2D
    command: VelocityCommand
    pedestrians: list  # of SfmAgent
    status: str = RUNNING
    steps: int = 0


class World:
    """One episode: robot on a unicycle model among SFM pedestrians."""

    def __init__(self, scenario: Scenario, grid: OccupancyGrid | None = None, dt: float = PHYSICS_DT):
        self.scenario = scenario
        self.grid = grid if grid is not None else scenario.build_grid()
        self.dt = dt
        self.robot_radius = ROBOT_RADIUS
        self.goal = np.asarray(scenario.goal, dtype=float)
        peds = [
            SfmAgent(np.array(p.start, dtype=float), np.zeros(2), p.desired_speed, p.radius,
                     list(p.waypoints), 0, p.loop, id=i)
            for i, p in enumerate(scenario.pedestrians)
        ]
        self.state = WorldState(0.0, scenario.robot_start, VelocityCommand(), peds)

    # convenience views
    @property
    def time(self) -> float:
        return self.state.time

    @property
    def status(self) -> str:
        return self.state.status

    @property
    def robot(self) -> Pose2D:
        return self.state.robot

    @property
    def pedestrians(self) -> list:
        return self.state.pedestrians

    def robot_velocity(self) -> np.ndarray:
        s = self.state
        return s.command.v * np.array([math.cos(s.robot.theta), math.sin(s.robot.theta)])

    def robot_agent(self) -> SfmAgent:
        s = self.state
        return SfmAgent(np.array([s.robot.x, s.robot.y]), self.robot_velocity(), V_MAX, self.robot_radius)

    def pedestrian_arrays(self):
        peds = self.state.pedestrians
        pos = np.array([p.position for p in peds]).reshape(-1, 2)
        vel = np.array([p.velocity for p in peds]).reshape(-1, 2)
        rad = np.array([p.radius for p in peds])
        return pos, vel, rad

    def in_collision(self) -> bool:
        r = self.state.robot
        if not self.grid.contains(r.x, r.y):
            return True
        if float(self.grid.clearance(np.array([r.x, r.y]))) < self.robot_radius:
            return True
        for p in self.state.pedestrians:
            if math.hypot(p.position[0] - r.x, p.position[1] - r.y) < self.robot_radius + p.radius:
                return True
        return False

    def step(self, cmd: VelocityCommand) -> WorldState:
        s = self.state
        if s.status != RUNNING:
            raise TerminalStateError(f"episode already ended with status '{s.status}'")
        cmd = cmd.clamped(V_MAX, W_MAX)
        robot_view = self.robot_agent()
        x, y, th = integrate_unicycle(s.robot.x, s.robot.y, s.robot.theta, cmd.v, cmd.w, self.dt)
        peds = step_pedestrians(s.pedestrians, self.grid,
                                replace(robot_view, velocity=cmd.v * np.array([math.cos(s.robot.theta),
                                                                               math.sin(s.robot.theta)])),
                                self.dt, self.scenario.sfm)
        steps = s.steps + 1
        self.state = WorldState(steps * self.dt, Pose2D(float(x), float(y), float(th)), cmd, peds,
                                RUNNING, steps)
        self.state.status = self._classify()
        return self.state

    def _classify(self) -> str:
        r = self.state.robot
        if self.in_collision():
            return COLLISION
        if math.hypot(self.goal[0] - r.x, self.goal[1] - r.y) < GOAL_TOLERANCE:
            return SUCCESS
        if self.state.time >= self.scenario.max_duration - 1e-9:
            return TIMEOUT
        return RUNNING

    def scan(self, n_rays: int = LIDAR_RAYS, max_range: float = LIDAR_MAX_RANGE) -> np.ndarray:
        """Robot-frame LiDAR ranges; pedestrians are visible."""
        r = self.state.robot
        ranges = static_scan(self.grid, r, n_rays, max_range)
        pos, _, rad = self.pedestrian_arrays()
        if len(pos):
            ang = r.theta + scan_angles(n_rays)
            u = np.stack([np.cos(ang), np.sin(ang)], axis=1)  # (R, 2)
            rel = pos - np.array([r.x, r.y])  # (P, 2)
            proj = u @ rel.T  # (R, P)
            c2 = (rel ** 2).sum(axis=1)
            disc = proj ** 2 - (c2 - rad ** 2)
            root = np.sqrt(np.maximum(disc, 0.0))
            t = proj - root
            inside = c2 < rad ** 2
            hit = (disc >= 0) & (proj + root > 0)
            t = np.where(inside, 0.0, t)
            t = np.where(hit | inside, t, np.inf)
            ranges = np.minimum(ranges, t.min(axis=1))
        return np.clip(ranges, 0.0, max_range)


def step(world: World, cmd: VelocityCommand) -> WorldState:
    return world.step(cmd)


def scan(world: World) -> np.ndarray:
    return world.scan()


# -- library -------------------------------------------------------------------

LIBRARY_NAMES = (
    "free_space",
    "frontal_passing",
    "frontal_passing_corridor",
    "overtaking",
    "overtaking_corridor",
    "crossing",
    "crossing_pair",
    "static_blocker",
    "narrow_passage",
    "mixed_crowd",
    "mixed_crowd_loop",
    "doorway",
)


def scenario_text(name: str) -> str:
    if name not in LIBRARY_NAMES:
        raise KeyError(f"unknown scenario '{name}'")
    return resources.files("sfwnav.scenarios").joinpath(f"{name}.scn").read_text()


def get_scenario(name: str) -> tuple[Scenario, OccupancyGrid]:
    return load_scenario(scenario_text(name))


def scenario_library() -> dict:
    """All built-in scenarios keyed by name, in a fixed order."""
    return {name: get_scenario(name)[0] for name in LIBRARY_NAMES}
