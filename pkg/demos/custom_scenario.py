"""Load a scenario from text, drive it with the SFW planner and read the simulated scan.

    python3 demos/custom_scenario.py
"""

from sfwnav.controller import SFW_WEIGHTS
from sfwnav.episode import Episode
from sfwnav.world import load_scenario

TEXT = """
[scenario]
name l_turn
[world]
size 8 8
border
rect 0 3 5 0.2          # wall with a gap on the right
[robot]
start 1 1.5 0
goal 1.5 6
[pedestrian]
start 6.5 6
waypoint 6.5 1
speed 0.8
"""


def main():
    scenario, grid = load_scenario(TEXT)
    ep = Episode(scenario, grid)
    while not ep.done:
        ep.advance(SFW_WEIGHTS)
    print(f"{scenario.name}: {ep.status} after {ep.world.time:.2f} s, {ep.control_steps} control steps")
    print("final scan, first 6 beams:", [round(float(d), 2) for d in ep.world.scan()[:6]])


if __name__ == "__main__":
    main()
