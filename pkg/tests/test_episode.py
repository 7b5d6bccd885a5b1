import math

import pytest

from sfwnav.controller import DWA_WEIGHTS, SFW_WEIGHTS
from sfwnav.episode import (CONTROL_PER_AGENT, PHYSICS_PER_CONTROL, PROXEMICS_BOUNDS, Episode, proxemics_zone)
from sfwnav.world import get_scenario


def test_zone_bounds():
    assert [proxemics_zone(d) for d in (0.0, 0.449, 0.45, 1.19, 1.2, 3.59, 3.6, math.inf)] == \
        [0, 0, 1, 1, 2, 2, 3, 3]
    assert PROXEMICS_BOUNDS == (0.45, 1.2, 3.6)


def test_cadence():
    s, g = get_scenario("crossing")
    ep = Episode(s.instance(0), g)
    info = ep.advance(SFW_WEIGHTS)
    assert info.control_steps == CONTROL_PER_AGENT == 5
    assert len(ep.trace) == 1 + PHYSICS_PER_CONTROL * CONTROL_PER_AGENT
    assert ep.world.time == pytest.approx(0.5)
    # the planner command is held for two physics steps
    v = [row[4] for row in ep.trace[1:]]
    assert v[0::2] == v[1::2]


def test_dwa_equals_zero_social_weight():
    s, g = get_scenario("frontal_passing")
    a = Episode(s.instance(2), g, social=False)
    b = Episode(s.instance(2), g, social=True)
    while not (a.done or b.done):
        a.advance(DWA_WEIGHTS)
        b.advance(DWA_WEIGHTS)
    assert a.commands == b.commands and a.status == b.status


def test_proxemics_sum_and_bookkeeping():
    s, g = get_scenario("mixed_crowd")
    ep = Episode(s.instance(0), g)
    while not ep.done:
        ep.advance(SFW_WEIGHTS)
    assert sum(ep.zone_counts) == ep.control_steps == len(ep.commands)
    assert sum(ep.proxemics_fractions()) == pytest.approx(1.0, abs=1e-12)
    assert ep.sw.total >= 0


def test_social_work_matches_steps():
    s, g = get_scenario("overtaking")
    ep = Episode(s.instance(0), g)
    total = 0.0
    for _ in range(6):
        total += ep.advance(SFW_WEIGHTS).social_work
    assert total == pytest.approx(ep.sw.total, rel=1e-12)
