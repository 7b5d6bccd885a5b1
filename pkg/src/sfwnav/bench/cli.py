"""Command line: run, suite, train, plot, scenarios."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..drl.checkpoint import CheckpointError
from ..drl.train import TrainConfig, train
from ..world import LIBRARY_NAMES, ScenarioError
from .plot import plot_episode
from .runner import METHODS, run_episode
from .suite import SuiteConfig, run_suite
from .trace import read_trace, write_trace


class UsageError(Exception):
    """Bad invocation; reported with exit status 2."""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfwnav", description="Social-force navigation benchmark.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a single episode")
    r.add_argument("--scenario", required=True, help="library name or path to a .scn file")
    r.add_argument("--method", required=True, choices=METHODS)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--checkpoint", help="policy checkpoint (sfw-sac only)")
    r.add_argument("--out", help="directory for the trace CSV and metrics JSON")

    s = sub.add_parser("suite", help="run a scenario x method x seed sweep")
    s.add_argument("--config", required=True, help="suite configuration (JSON)")
    s.add_argument("--out-dir", required=True)

    t = sub.add_parser("train", help="train the weight-tuning agent")
    t.add_argument("--config", required=True, help="training configuration (JSON)")
    t.add_argument("--out-dir", required=True)
    t.add_argument("--resume", nargs="?", const=True, default=None,
                   help="continue from a checkpoint (latest in --out-dir if no path given)")
    t.add_argument("--seed", type=int, help="override the configured seed")

    pl = sub.add_parser("plot", help="render a trace as SVG")
    pl.add_argument("--trace", required=True)
    pl.add_argument("--out", required=True)

    sub.add_parser("scenarios", help="list the built-in scenarios")
    return p


def _scenario_arg(value: str):
    if value in LIBRARY_NAMES:
        return value
    path = Path(value)
    if path.suffix == ".scn" and path.exists():
        from ..world import load_scenario
        return load_scenario(path.read_text())
    raise UsageError(f"unknown scenario '{value}' (see 'sfwnav scenarios')")


def _config_file(value: str) -> Path:
    path = Path(value)
    if not path.is_file():
        raise UsageError(f"config file not found: {value}")
    return path


def cmd_run(a) -> int:
    if a.method == "sfw-sac" and not a.checkpoint:
        raise UsageError("--method sfw-sac needs --checkpoint")
    metrics, trace = run_episode(_scenario_arg(a.scenario), a.method, a.seed, a.checkpoint)
    if a.out:
        out = Path(a.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{metrics.scenario}__{a.method}__{a.seed}"
        write_trace(trace, out / f"{stem}.csv")
        (out / f"{stem}.metrics.json").write_text(json.dumps(metrics.as_dict(), indent=2) + "\n")
    print(metrics.summary())
    return 0


def cmd_suite(a) -> int:
    try:
        cfg = SuiteConfig.load(_config_file(a.config))
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad suite config: {e}") from None
    report = run_suite(cfg, a.out_dir)
    for agg in report.aggregates:
        if agg["scenario"] == "avg":
            print(f"{agg['method']}: success {agg['success_pct']:.1f}% sw_step {agg['sw_step']:.4f}")
    for msg in report.problems:
        print(f"sfwnav suite: inconsistent metrics: {msg}", file=sys.stderr)
    return 1 if report.problems else 0


def cmd_train(a) -> int:
    try:
        cfg = TrainConfig.load(_config_file(a.config))
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad training config: {e}") from None
    if a.seed is not None:
        cfg.seed = a.seed

    def progress(row):
        print(f"episode {row[0]} steps {row[1]} return {float(row[2]):.2f} {row[3]}", flush=True)

    train(cfg, a.out_dir, resume=a.resume, progress=progress)
    return 0


def cmd_plot(a) -> int:
    trace = read_trace(a.trace)
    Path(a.out).write_text(plot_episode(trace))
    return 0


def cmd_scenarios(a) -> int:
    for name in LIBRARY_NAMES:
        print(name)
    return 0


COMMANDS = {"run": cmd_run, "suite": cmd_suite, "train": cmd_train, "plot": cmd_plot, "scenarios": cmd_scenarios}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"sfwnav {args.command}: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ScenarioError, CheckpointError) as e:
        print(f"sfwnav {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
