"""Scenario x method x seed sweeps with CSV reports."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..world import LIBRARY_NAMES
from .runner import METHODS, EpisodeMetrics, metrics_problems, run_episode
from .trace import write_trace

EPISODE_HEADER = ("scenario", "method", "seed", "success", "time_s", "path_m", "v_avg", "sw_total", "sw_step",
                  "prox_intimate", "prox_personal", "prox_social", "prox_public")
AGGREGATE_HEADER = ("scenario", "method", "episodes", "success_pct", "time_s", "path_m", "v_avg", "sw_step",
                    "prox_intimate", "prox_personal", "prox_social", "prox_public")
AVERAGE_ROW = "avg"


@dataclass
class SuiteConfig:
    scenarios: list = field(default_factory=lambda: list(LIBRARY_NAMES))
    methods: list = field(default_factory=lambda: ["dwa", "sfw"])
    seeds: list = field(default_factory=lambda: list(range(10)))
    checkpoint: str | None = None
    write_traces: bool = False
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> SuiteConfig:
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__) - {"n_seeds"}
        if unknown:
            raise ValueError(f"unknown suite config keys: {sorted(unknown)}")
        if "n_seeds" in d:
            if "seeds" in d:
                raise ValueError("give either seeds or n_seeds, not both")
            d["seeds"] = list(range(int(d.pop("n_seeds"))))
        if d.get("scenarios") == "all":
            d["scenarios"] = list(LIBRARY_NAMES)
        cfg = cls(**d)
        if cfg.checkpoint and base_dir is not None and not Path(cfg.checkpoint).is_absolute():
            cfg.checkpoint = str(Path(base_dir) / cfg.checkpoint)
        if not cfg.scenarios or not cfg.methods or not cfg.seeds:
            raise ValueError("suite needs at least one scenario, method and seed")
        bad = [m for m in cfg.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}")
        if "sfw-sac" in cfg.methods and not cfg.checkpoint:
            raise ValueError("method sfw-sac requires a checkpoint")
        return cfg

    @classmethod
    def load(cls, path) -> SuiteConfig:
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)


@dataclass
class RunReport:
    episodes: list  # of EpisodeMetrics, ordered by (scenario, method, seed)
    aggregates: list  # of dicts keyed by AGGREGATE_HEADER; last rows are the averages
    problems: list = field(default_factory=list)  # metric self-consistency violations


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def episode_row(m: EpisodeMetrics) -> dict:
    return {
        "scenario": m.scenario, "method": m.method, "seed": str(m.seed), "success": str(int(m.success)),
        "time_s": _num(m.time), "path_m": _num(m.path_length), "v_avg": _num(m.v_avg),
        "sw_total": _num(m.sw_total), "sw_step": _num(m.sw_step),
        "prox_intimate": _num(m.proxemics[0]), "prox_personal": _num(m.proxemics[1]),
        "prox_social": _num(m.proxemics[2]), "prox_public": _num(m.proxemics[3]),
    }


def _mean(values):
    values = [v for v in values if v is not None]
    if not values:
        return None
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def _parse(x: str):
    return None if x == "" else float(x)


def aggregate(rows: list) -> list:
    """Per (scenario, method) means plus one average row per method.

    ``rows`` are episode rows as dicts of strings (what the CSV holds), so
    re-aggregating a parsed CSV gives identical output. time/path/v_avg
    average successes only; everything else averages all episodes. The
    average row is the mean of the per-scenario values.
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["scenario"], r["method"]), []).append(r)
    out = []
    for (scenario, method), grp in groups.items():
        agg = {"scenario": scenario, "method": method, "episodes": len(grp),
               "success_pct": 100.0 * sum(int(r["success"]) for r in grp) / len(grp)}
        for key in ("time_s", "path_m", "v_avg"):
            agg[key] = _mean([_parse(r[key]) for r in grp if r["success"] == "1"])
        for key in ("sw_step", "prox_intimate", "prox_personal", "prox_social", "prox_public"):
            agg[key] = _mean([_parse(r[key]) for r in grp])
        out.append(agg)
    methods = list(dict.fromkeys(a["method"] for a in out))
    for method in methods:
        per = [a for a in out if a["method"] == method]
        avg = {"scenario": AVERAGE_ROW, "method": method, "episodes": sum(a["episodes"] for a in per)}
        for key in AGGREGATE_HEADER[3:]:
            avg[key] = _mean([a[key] for a in per])
        out.append(avg)
    return out


def aggregate_row_strings(agg: dict) -> dict:
    return {k: (str(agg[k]) if k in ("scenario", "method", "episodes") else _num(agg[k])) for k in AGGREGATE_HEADER}


def _job(args):
    scenario, method, seed, checkpoint = args
    try:
        metrics, trace = run_episode(scenario, method, seed, checkpoint)
        return metrics, trace, None
    except Exception as exc:  # recorded as a failed row, never aborts the suite
        return None, None, f"{type(exc).__name__}: {exc}"


def _failed(scenario, method, seed, status) -> EpisodeMetrics:
    return EpisodeMetrics(scenario, method, seed, False, status, None, None, None, 0.0, 0.0, 0,
                          (0.0, 0.0, 0.0, 1.0))


def run_suite(config: SuiteConfig | dict, out_dir=None) -> RunReport:
    """Run every (scenario, method, seed); rows are ordered by that key.

    With ``out_dir`` set, writes ``episodes.csv``, ``aggregates.csv`` and,
    if requested, one trace per episode under ``traces/``.
    """
    cfg = config if isinstance(config, SuiteConfig) else SuiteConfig.from_dict(config)
    jobs = [(s, m, int(seed), cfg.checkpoint if m == "sfw-sac" else None)
            for s in cfg.scenarios for m in cfg.methods for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]

    episodes = []
    errors = []
    problems = []
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for (s, m, seed, _), (metrics, trace, err) in zip(jobs, results):
        if err is not None:
            metrics = _failed(s, m, seed, "error")
            errors.append(f"{s} {m} {seed}: {err}")
        else:
            problems += [f"{s} {m} {seed}: {msg}" for msg in metrics_problems(metrics, trace)]
            if out is not None and cfg.write_traces:
                (out / "traces").mkdir(exist_ok=True)
                write_trace(trace, out / "traces" / f"{s}__{m}__{seed}.csv")
        episodes.append(metrics)

    rows = [episode_row(m) for m in episodes]
    aggregates = aggregate(rows)
    if out is not None:
        write_csv(out / "episodes.csv", EPISODE_HEADER, rows)
        write_csv(out / "aggregates.csv", AGGREGATE_HEADER, [aggregate_row_strings(a) for a in aggregates])
        if errors:
            (out / "errors.txt").write_text("\n".join(errors) + "\n")
        if problems:
            (out / "consistency.txt").write_text("\n".join(problems) + "\n")
    return RunReport(episodes, aggregates, problems)


def write_csv(path, header, rows):
    with Path(path).open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=list(header), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def read_csv(path) -> list:
    with Path(path).open(newline="") as f:
        return list(csv.DictReader(f))
