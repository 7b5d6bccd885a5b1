"""Run DWA and SFW side by side on a few library scenarios and plot each episode.

    python3 demos/compare_planners.py [out_dir]
"""

import sys
from pathlib import Path

from sfwnav.bench.plot import plot_episode
from sfwnav.bench.runner import run_episode

SCENARIOS = ["frontal_passing", "overtaking", "crossing", "static_blocker"]


def main(out_dir="demo_out"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for scenario in SCENARIOS:
        for method in ("dwa", "sfw"):
            metrics, trace = run_episode(scenario, method, seed=0)
            (out / f"{scenario}__{method}.svg").write_text(plot_episode(trace))
            print(metrics.summary())
    print(f"plots written to {out}/")


if __name__ == "__main__":
    main(*sys.argv[1:])
