"""Socially aware local navigation: SFM crowds, a social-work DWA planner and a SAC weight tuner."""

from .controller import DWA_WEIGHTS, SFW_WEIGHTS, ControllerParams, CostWeights, SFWController
from .geometry import OccupancyGrid, Pose2D, VelocityCommand
from .global_planner import GlobalPath, local_waypoint, plan_global
from .world import World, get_scenario, load_scenario, scenario_library

__version__ = "0.1.0"

__all__ = [
    "DWA_WEIGHTS", "SFW_WEIGHTS", "ControllerParams", "CostWeights", "SFWController", "OccupancyGrid",
    "Pose2D", "VelocityCommand", "GlobalPath", "local_waypoint", "plan_global", "World", "get_scenario",
    "load_scenario", "scenario_library",
]
