import dataclasses
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sfwnav.bench.plot import plot_episode, snapshot_indices
from sfwnav.bench.runner import METHODS, metrics_problems, recount_proxemics, run_episode
from sfwnav.bench.suite import (AGGREGATE_HEADER, EPISODE_HEADER, SuiteConfig, aggregate, episode_row, read_csv,
                                run_suite)
from sfwnav.bench.trace import Trace, read_trace, write_trace
from sfwnav.drl.checkpoint import save_checkpoint
from sfwnav.drl.sac import SACAgent, SACConfig

from .oracles import consistency_problems

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def free_run():
    return run_episode("free_space", "sfw", 0)


@pytest.fixture(scope="module")
def crossing_run():
    return run_episode("crossing", "dwa", 1)


class TestRunEpisode:
    def test_free_space_speed(self, free_run):
        m, trace = free_run
        assert m.success and m.status == "success"
        # kinematic oracle: full speed after the start-up ramp, shortened by goal tolerance
        assert 0.6 * 0.7 < m.v_avg <= 0.6
        assert m.v_avg == pytest.approx(m.path_length / m.time)
        assert m.sw_step * m.steps == m.sw_total

    def test_invariants(self, crossing_run):
        m, trace = crossing_run
        assert m.status in ("success", "collision", "timeout")
        assert sum(m.proxemics) == pytest.approx(1.0, abs=1e-9)
        assert m.sw_step * m.steps == m.sw_total
        assert recount_proxemics(trace) == pytest.approx(m.proxemics, abs=1e-12)
        if m.success:
            assert trace.path_length() == pytest.approx(m.path_length, abs=1e-9)
        assert m.steps == trace.meta["control_steps"] == math.ceil((len(trace) - 1) / 2)

    def test_failures_hide_time(self):
        m, _ = run_episode("static_blocker", "sfw", 0)
        if not m.success:
            assert m.time is None and m.path_length is None and m.v_avg is None

    def test_deterministic(self, tmp_path, crossing_run):
        m, trace = run_episode("crossing", "dwa", 1)
        assert m == crossing_run[0]
        write_trace(trace, tmp_path / "a.csv")
        write_trace(crossing_run[1], tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_sac_needs_checkpoint(self):
        with pytest.raises(ValueError):
            run_episode("free_space", "sfw-sac", 0)
        with pytest.raises(ValueError):
            run_episode("free_space", "teleport", 0)

    def test_sac_with_checkpoint(self, tmp_path):
        agent = SACAgent(0, SACConfig(hidden=(8, 8)))
        save_checkpoint(agent, tmp_path / "p.ckpt")
        m, _ = run_episode("free_space", "sfw-sac", 0, tmp_path / "p.ckpt")
        assert m.method == "sfw-sac" and m.status in ("success", "collision", "timeout")


class TestTrace:
    def test_round_trip(self, tmp_path, crossing_run):
        trace = crossing_run[1]
        write_trace(trace, tmp_path / "t.csv")
        back = read_trace(tmp_path / "t.csv")
        assert np.array_equal(back.rows, trace.rows) and back.meta == trace.meta
        assert back.columns[:8] == ["t", "x", "y", "theta", "v", "w", "p0_x", "p0_y"]

    def test_path_length_recompute(self):
        rows = np.zeros((3, 6))
        rows[:, 1] = [0.0, 3.0, 3.0]
        rows[:, 2] = [0.0, 4.0, 5.0]
        assert Trace(rows).path_length() == 6.0

    def test_not_a_trace(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_trace(tmp_path / "x.csv")


class TestSuite:
    def test_config(self):
        cfg = SuiteConfig.from_dict({"scenarios": "all", "methods": ["dwa"], "n_seeds": 2})
        assert len(cfg.scenarios) == 12 and cfg.seeds == [0, 1]
        for bad in ({"methods": ["nope"]}, {"seeds": []}, {"methods": ["sfw-sac"]}, {"extra": 1},
                    {"seeds": [0], "n_seeds": 1}):
            with pytest.raises(ValueError):
                SuiteConfig.from_dict(bad)

    def test_single_seed_aggregates_equal_rows(self, tmp_path):
        cfg = {"scenarios": ["free_space", "crossing"], "methods": ["dwa", "sfw"], "n_seeds": 1,
               "write_traces": True}
        report = run_suite(cfg, tmp_path)
        assert len(report.episodes) == 4
        rows = read_csv(tmp_path / "episodes.csv")
        assert tuple(rows[0].keys()) == EPISODE_HEADER
        assert (tmp_path / "episodes.csv").read_text().splitlines()[0] == \
            "scenario,method,seed,success,time_s,path_m,v_avg,sw_total,sw_step,prox_intimate,prox_personal," \
            "prox_social,prox_public"
        for r, a in zip(rows, report.aggregates):
            assert a["success_pct"] == 100.0 * int(r["success"])
            assert a["sw_step"] == float(r["sw_step"])
            if r["success"] == "1":
                assert a["time_s"] == float(r["time_s"])
        assert consistency_problems(tmp_path) == [] and report.problems == []
        assert not (tmp_path / "consistency.txt").exists()
        # re-aggregating the CSV reproduces the aggregates file
        agg = read_csv(tmp_path / "aggregates.csv")
        assert tuple(agg[0].keys()) == AGGREGATE_HEADER
        again = aggregate(rows)
        assert [a["sw_step"] for a in again] == [float(x["sw_step"]) for x in agg]
        assert [x["scenario"] for x in agg][-2:] == ["avg", "avg"]

    def test_success_percentage(self):
        rows = []
        for seed, ok in enumerate([1, 0, 1, 1]):
            rows.append({"scenario": "s", "method": "dwa", "seed": str(seed), "success": str(ok),
                         "time_s": "10.0" if ok else "", "path_m": "5.0" if ok else "",
                         "v_avg": "0.5" if ok else "", "sw_total": "1.0", "sw_step": "0.25",
                         "prox_intimate": "0.0", "prox_personal": "0.0", "prox_social": "0.5", "prox_public": "0.5"})
        agg = aggregate(rows)[0]
        assert agg["success_pct"] == 75.0 and agg["time_s"] == 10.0 and agg["episodes"] == 4

    def test_errors_become_rows(self, tmp_path):
        report = run_suite({"scenarios": ["free_space"], "methods": ["sfw-sac"], "seeds": [0],
                            "checkpoint": str(tmp_path / "missing.ckpt")}, tmp_path)
        assert report.episodes[0].status == "error" and not report.episodes[0].success
        assert "missing.ckpt" in (tmp_path / "errors.txt").read_text()

    def test_row_formatting(self, free_run):
        row = episode_row(free_run[0])
        assert row["success"] == "1" and float(row["sw_step"]) == free_run[0].sw_step


class TestPlot:
    def test_valid_svg_with_labels(self, crossing_run):
        svg = plot_episode(crossing_run[1])
        root = ET.fromstring(svg.encode())
        assert root.tag == SVG + "svg"
        labels = [t.text for t in root.iter(SVG + "text") if t.get("class") == "robot-label"]
        assert labels == ["1", "2", "3"]
        robots = [r for r in root.iter(SVG + "rect") if r.get("class") == "robot"]
        assert len(robots) == 3
        opac = [float(g.get("opacity")) for g in root.iter(SVG + "g") if g.get("id", "").startswith("snapshot")]
        assert opac == sorted(opac) and len(set(opac)) == 3
        assert root.find(f".//{SVG}circle[@id='goal']").get("fill") == "#2ca02c"
        assert len([e for e in root.iter(SVG + "ellipse")]) == 3 * crossing_run[1].n_peds

    def test_byte_identical(self, crossing_run, tmp_path):
        write_trace(crossing_run[1], tmp_path / "t.csv")
        assert plot_episode(read_trace(tmp_path / "t.csv")) == plot_episode(crossing_run[1])

    def test_empty_trace(self):
        with pytest.raises(ValueError):
            plot_episode(Trace(np.zeros((0, 6))))

    def test_snapshot_indices(self):
        assert snapshot_indices(101) == [0, 50, 100]
        assert snapshot_indices(1) == [0, 0, 0]


def test_metrics_problems_detects_tampering(crossing_run):
    m, trace = crossing_run
    assert metrics_problems(m, trace) == []
    bad = dataclasses.replace(m, sw_total=m.sw_total + 1e-9, proxemics=(0.5, 0.5, 0.5, 0.0))
    assert len(metrics_problems(bad, trace)) == 3


def test_methods():
    assert METHODS == ("dwa", "sfw", "sfw-sac")
