import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwnav.geometry import OccupancyGrid, Pose2D
from sfwnav.global_planner import SQRT2, UnreachableError, astar_cells, local_waypoint, plan_global

from .oracles import path_steps, ucs_cost


def test_free_space_straight():
    grid = OccupancyGrid.from_extent(20, 20, 1.0)
    path = plan_global(grid, (2.5, 10.5), (17.5, 10.5), inflation=0.0)
    assert path.total_length == pytest.approx(15.0, abs=1.0)
    assert path.waypoints[0] == pytest.approx([2.5, 10.5])
    assert path.waypoints[-1] == pytest.approx([17.5, 10.5])


def test_goal_in_obstacle():
    grid = OccupancyGrid.from_extent(10, 10, 0.1)
    grid.fill_rect(6, 6, 2, 2)
    with pytest.raises(UnreachableError):
        plan_global(grid, (1, 1), (7, 7))


def test_walled_off_goal():
    grid = OccupancyGrid.from_extent(10, 10, 0.1)
    grid.fill_rect(5, 0, 0.3, 10)
    with pytest.raises(UnreachableError):
        plan_global(grid, (1, 5), (9, 5))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_astar_matches_dijkstra(seed):
    rng = np.random.default_rng(seed)
    blocked = rng.random((20, 20)) < 0.3
    blocked[0, 0] = blocked[19, 19] = False
    expected = ucs_cost(blocked, (0, 0), (19, 19))
    if expected is None:
        with pytest.raises(UnreachableError):
            astar_cells(blocked, (0, 0), (19, 19))
    else:
        assert path_steps(astar_cells(blocked, (0, 0), (19, 19))) == expected


def test_path_avoids_inflated_cells_and_spacing():
    grid = OccupancyGrid.from_extent(10, 6, 0.05)
    grid.fill_border()
    grid.fill_rect(4, 0, 0.5, 4)
    path = plan_global(grid, (1, 1), (9, 1))
    blocked = grid.inflated(0.30)
    for x, y in path.waypoints:
        ix, iy = grid.world_to_cell(x, y)
        assert not blocked[iy, ix]
    gaps = np.hypot(*np.diff(path.waypoints, axis=0).T)
    assert gaps.max() <= SQRT2 * grid.resolution + 1e-9
    assert path.total_length == pytest.approx(gaps.sum())


def test_deterministic():
    grid = OccupancyGrid.from_extent(10, 10, 0.05)
    grid.fill_rect(3, 3, 4, 4)
    a = plan_global(grid, (1, 1), (9, 9))
    b = plan_global(grid, (1, 1), (9, 9))
    assert np.array_equal(a.waypoints, b.waypoints)


class TestLocalWaypoint:
    def setup_method(self):
        grid = OccupancyGrid.from_extent(12, 4, 0.05)
        self.path = plan_global(grid, (1.0, 2.025), (11.0, 2.025))

    def test_two_meters_ahead(self):
        wp = local_waypoint(self.path, Pose2D(1.0, 2.025, 0.0))
        assert wp == pytest.approx([3.0, 2.025])

    def test_final_section_is_goal(self):
        wp = local_waypoint(self.path, Pose2D(10.0, 2.025, 0.0))
        assert wp == pytest.approx([11.0, 2.025])

    def test_lateral_offset_uses_projection(self):
        a = local_waypoint(self.path, Pose2D(4.0, 2.025, 0.0))
        b = local_waypoint(self.path, Pose2D(4.0, 2.525, 1.0))
        assert a == pytest.approx(b)

    def test_monotone_with_progress(self):
        s_prev = -math.inf
        for x in np.linspace(1.0, 11.0, 40):
            wp = local_waypoint(self.path, Pose2D(x, 2.1, 0.0))
            s = self.path.project(*wp)
            assert s >= s_prev - 1e-12
            s_prev = s
