"""Single-episode evaluation of DWA, SFW and SFW-SAC."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..controller import DWA_WEIGHTS, SFW_WEIGHTS, ControllerParams
from ..drl.checkpoint import load_checkpoint
from ..drl.env import WeightEnv
from ..drl.sac import SACAgent
from ..episode import ZONES, Episode
from ..world import ROBOT_RADIUS, SUCCESS, Scenario, get_scenario
from .trace import Trace

METHODS = ("dwa", "sfw", "sfw-sac")


@dataclass
class EpisodeMetrics:
    scenario: str
    method: str
    seed: int
    success: bool
    status: str
    time: float | None  # s, successes only
    path_length: float | None  # m, successes only
    v_avg: float | None  # m/s, successes only
    sw_total: float
    sw_step: float
    steps: int  # executed control steps
    proxemics: tuple  # (intimate, personal, social, public) time fractions

    def as_dict(self) -> dict:
        d = asdict(self)
        d["proxemics"] = list(self.proxemics)
        return d

    def summary(self) -> str:
        def f(x, spec):
            return "-" if x is None else format(x, spec)
        prox = " ".join(f"{z}={p:.3f}" for z, p in zip(ZONES, self.proxemics))
        return (f"{self.scenario} {self.method} seed={self.seed} status={self.status} "
                f"time={f(self.time, '.2f')} path={f(self.path_length, '.3f')} v_avg={f(self.v_avg, '.3f')} "
                f"sw_step={self.sw_step:.4f} {prox}")


def _resolve(scenario) -> tuple[Scenario, object]:
    if isinstance(scenario, str):
        return get_scenario(scenario)
    if isinstance(scenario, tuple):
        return scenario
    return scenario, scenario.build_grid()


def episode_metrics(ep: Episode, method: str, seed: int, path_length: float | None = None) -> EpisodeMetrics:
    steps = ep.control_steps
    sw_step = ep.sw.total / steps if steps else 0.0
    success = ep.status == SUCCESS
    length = ep.path_length if path_length is None else path_length
    t = ep.world.time
    return EpisodeMetrics(
        scenario=ep.scenario.name, method=method, seed=seed, success=success, status=ep.status,
        time=t if success else None,
        path_length=length if success else None,
        v_avg=length / t if success and t > 0 else None,
        # reported as sw_step * steps so the identity holds bit for bit
        sw_total=sw_step * steps, sw_step=sw_step, steps=steps,
        proxemics=ep.proxemics_fractions(),
    )


def metrics_problems(m: EpisodeMetrics, trace: Trace) -> list:
    """Self-consistency of one episode's metrics against its own trace; empty when sound."""
    problems = []
    if abs(sum(m.proxemics) - 1.0) > 1e-9 or min(m.proxemics) < 0.0:
        problems.append(f"proxemics fractions {m.proxemics} do not sum to 1")
    if m.sw_step * m.steps != m.sw_total:
        problems.append("sw_step * steps != sw_total")
    if m.success and abs(trace.path_length() - m.path_length) > 1e-9:
        problems.append(f"path length {m.path_length} vs trace {trace.path_length()}")
    if any(abs(a - b) > 1e-12 for a, b in zip(recount_proxemics(trace), m.proxemics)):
        problems.append("proxemics recount from trace differs")
    return problems


def episode_trace(ep: Episode, method: str, seed: int) -> Trace:
    s = ep.scenario
    meta = {
        "scenario": s.name, "method": method, "seed": seed, "status": ep.status,
        "size": list(s.size), "resolution": s.resolution, "border": s.border,
        "obstacles": [list(o[:2]) + ([[list(p) for p in o[2]]] if o[0] == "polyline" else list(o[2:]))
                      for o in s.obstacles],
        "robot_start": [s.robot_start.x, s.robot_start.y, s.robot_start.theta],
        "goal": list(s.goal), "robot_radius": ROBOT_RADIUS,
        "ped_radii": [p.radius for p in s.pedestrians],
        "global_path": [list(map(float, w)) for w in ep.path.waypoints],
        "physics_per_control": 2,
        "control_steps": ep.control_steps,
    }
    return Trace(ep.trace, meta)


def run_episode(scenario, method: str, seed: int, checkpoint=None,
                params: ControllerParams | None = None) -> tuple[EpisodeMetrics, Trace]:
    """Closed-loop episode; ``scenario`` is a library name, a Scenario or ``(Scenario, grid)``.

    ``checkpoint`` (path or loaded agent) is required for ``sfw-sac``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}', expected one of {METHODS}")
    sc, grid = _resolve(scenario)
    if method == "sfw-sac":
        if checkpoint is None:
            raise ValueError("method sfw-sac requires a checkpoint")
        agent = checkpoint if isinstance(checkpoint, SACAgent) else load_checkpoint(checkpoint)[0]
        env = WeightEnv(sc, grid, params, spec=agent.spec)
        obs = env.reset(seed)
        ep = env.episode
        while not ep.done:
            weights, _ = agent.policy_forward(obs, deterministic=True)
            obs = env.step(weights).obs
    else:
        ep = Episode(sc.instance(seed), grid, params or ControllerParams(), social=(method == "sfw"))
        weights = SFW_WEIGHTS if method == "sfw" else DWA_WEIGHTS
        while not ep.done:
            ep.advance(weights)
    return episode_metrics(ep, method, seed), episode_trace(ep, method, seed)


def recount_proxemics(trace: Trace) -> tuple:
    """Zone fractions recomputed from the trace alone (control ticks are every
    ``physics_per_control`` rows, starting at row 0)."""
    meta = trace.meta
    stride = meta["physics_per_control"]
    n = meta["control_steps"]
    r_rob = meta["robot_radius"]
    radii = meta["ped_radii"]
    counts = [0, 0, 0, 0]
    bounds = (0.45, 1.2, 3.6)
    for i in range(n):
        row = trace.rows[i * stride]
        x, y = row[1], row[2]
        d = math.inf
        for k, rad in enumerate(radii):
            px, py = row[6 + 2 * k], row[7 + 2 * k]
            d = min(d, math.hypot(px - x, py - y) - r_rob - rad)
        zone = next((z for z, b in enumerate(bounds) if d < b), 3)
        counts[zone] += 1
    if n == 0:
        return (0.0, 0.0, 0.0, 1.0)
    return tuple(c / n for c in counts)
