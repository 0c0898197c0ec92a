import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from marsupial.environment import (Box, EdfGrid, PointCloud, TraversabilityParams, analyze_traversability,
                                   Environment, build_edf, distance_to_traversable, load_point_cloud,
                                   make_traversable_set, query_distance)
from marsupial.errors import EmptyCloud, GridTooLarge, NoTraversableSeed, ParseError
from marsupial.synthetic import dedupe, plane_x, plane_z

VOXEL_DIAG = 0.1 * math.sqrt(3)


def test_load_two_points(tmp_path):
    f = tmp_path / "c.xyz"
    f.write_text("# header\n0 0 0\n\n1 2 3\n")
    cloud = load_point_cloud(f)
    np.testing.assert_array_equal(cloud.points, [[0, 0, 0], [1, 2, 3]])


def test_load_empty(tmp_path):
    f = tmp_path / "c.xyz"
    f.write_text("# nothing\n")
    with pytest.raises(EmptyCloud):
        load_point_cloud(f)


def test_load_reports_line(tmp_path):
    f = tmp_path / "c.xyz"
    f.write_text("0 0 0\n1 1 1\na b c\n")
    with pytest.raises(ParseError) as err:
        load_point_cloud(f)
    assert err.value.line == 3


def test_three_four_five():
    grid = build_edf(PointCloud(np.zeros((1, 3))), Box((-0.05, -0.05, -0.05), (3.55, 4.55, 0.15)), 0.1)
    idx = np.round((np.array([3.0, 4.0, 0.0]) - grid.origin) / 0.1 - 0.5).astype(int)
    centre = grid.centre(idx)
    assert np.allclose(centre, [3.0, 4.0, 0.0])
    assert grid.distances[tuple(idx)] == pytest.approx(5.0, abs=0.05)
    assert grid.distances[0, 0, 0] < 0.1


def test_query_at_centre_is_stored_value(rng):
    cloud = PointCloud(rng.uniform(0, 2, (50, 3)))
    grid = build_edf(cloud, Box((0, 0, 0), (2, 2, 2)), 0.1)
    idx = (3, 7, 11)
    assert query_distance(grid, grid.centre(idx)).distance == pytest.approx(grid.distances[idx], abs=1e-12)


def test_linear_blend_between_voxels():
    d = np.ones((2, 2, 2))
    d[1] = 2.0
    grid = EdfGrid(np.zeros(3), 1.0, (2, 2, 2), d)
    q = query_distance(grid, (1.0, 0.5, 0.5))
    assert q.distance == pytest.approx(1.5)
    assert not q.clamped


def test_out_of_bounds_is_clamped_and_flagged():
    grid = build_edf(PointCloud(np.zeros((1, 3))), Box((-1, -1, -1), (1, 1, 1)), 0.1)
    q = query_distance(grid, (5.0, 0.0, 0.0))
    assert q.clamped and math.isfinite(q.distance)


def test_empty_cloud_field_is_large():
    grid = build_edf(PointCloud(np.zeros((0, 3))), Box((0, 0, 0), (1, 1, 1)), 0.1)
    assert np.all(grid.distances >= math.sqrt(3) - 1e-9)


def test_voxel_cap():
    with pytest.raises(GridTooLarge):
        build_edf(PointCloud(np.zeros((1, 3))), Box((0, 0, 0), (10, 10, 10)), 0.1, max_voxels=1000)


def test_build_is_deterministic(rng):
    cloud = PointCloud(rng.uniform(0, 2, (100, 3)))
    a = build_edf(cloud, Box((0, 0, 0), (2, 2, 2)), 0.1)
    b = build_edf(cloud, Box((0, 0, 0), (2, 2, 2)), 0.1)
    assert a.distances.tobytes() == b.distances.tobytes()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_edf_matches_brute_force(seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 2, (100, 3))
    grid = build_edf(PointCloud(pts), Box((0, 0, 0), (2, 2, 2)), 0.1)
    q = r.uniform(0, 2, (1000, 3))
    err = np.abs(grid.distance(q) - oracles.brute_distance(q, pts))
    assert err.max() < VOXEL_DIAG
    # voxel centres are exact
    idx = r.integers(0, 20, (200, 3))
    centres = grid.centre(idx)
    np.testing.assert_allclose(grid.distances[tuple(idx.T)], oracles.brute_distance(centres, pts), atol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_edf_is_lipschitz(seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 2, (80, 3))
    grid = build_edf(PointCloud(pts), Box((0, 0, 0), (2, 2, 2)), 0.1)
    p = r.uniform(0, 2, (300, 3))
    q = r.uniform(0, 2, (300, 3))
    gap = np.abs(grid.distance(p) - grid.distance(q))
    assert np.all(gap <= np.linalg.norm(p - q, axis=1) + VOXEL_DIAG)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 0.8))
def test_screened_distance_is_exact_where_it_matters(seed, threshold):
    r = np.random.default_rng(seed)
    cloud = PointCloud(r.uniform(0, 2, (200, 3)))
    grid = build_edf(cloud, Box((0, 0, 0), (2, 2, 2)), 0.2)
    env_like = Environment(cloud, Box((0, 0, 0), (2, 2, 2)), grid, grid, make_traversable_set([[1, 1, 0]]),
                           cloud.points)
    # some queries fall outside the grid on purpose
    q = r.uniform(-0.5, 2.5, (400, 3))
    got = env_like.screened_uav_distance(q, threshold)
    exact = oracles.brute_distance(q, env_like.cloud.points)
    np.testing.assert_array_equal(got <= threshold, exact <= threshold)
    assert got.min() == pytest.approx(exact.min(), abs=1e-12)
    loose = np.abs(got - exact) > 1e-9
    assert np.all(exact[loose] > threshold) and np.all(exact[loose] > exact.min())


def test_flat_floor_all_traversable():
    pts = dedupe(plane_z(0, 3, 0, 2, 0.0, 0.1))
    tset = analyze_traversability(PointCloud(pts), (1.0, 1.0, 0.0))
    assert len(tset) == len(pts)


def test_wall_excluded():
    floor = plane_z(0, 3, 0, 2, 0.0, 0.1)
    wall = plane_x(0, 2, 0.3, 2.0, 3.0, 0.1)
    pts = dedupe(np.vstack([floor, wall]))
    tset = analyze_traversability(PointCloud(pts), (1.0, 1.0, 0.0))
    assert np.all(tset.points[:, 2] < 0.05)
    # floor right under the wall top is not blocked, the wall itself is out
    assert not np.any(np.isin(tset.indices, np.flatnonzero(pts[:, 2] > 0.25)))


def test_chasm_splits_floor():
    near = plane_z(0, 2, 0, 1, 0.0, 0.1)
    far = plane_z(3, 5, 0, 1, 0.0, 0.1)
    pts = dedupe(np.vstack([near, far]))
    params = TraversabilityParams(adjacency_radius=0.3)
    tset = analyze_traversability(PointCloud(pts), (0.5, 0.5, 0.0), params)
    want = oracles.reachable(pts, 0.3, (0.5, 0.5, 0.0), 0.3, params.step_max)
    assert sorted(tset.indices.tolist()) == want
    assert np.all(tset.points[:, 0] <= 2.0 + 1e-9)


def test_isolated_start():
    pts = dedupe(plane_z(0, 1, 0, 1, 0.0, 0.1))
    with pytest.raises(NoTraversableSeed):
        analyze_traversability(PointCloud(pts), (5.0, 5.0, 0.0))


def test_distance_to_traversable_identity_and_single():
    pts = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    tset = make_traversable_set(pts)
    d, q = distance_to_traversable(tset, pts[1])
    assert d == 0.0 and np.array_equal(q, pts[1])
    single = make_traversable_set(pts[:1])
    d, q = distance_to_traversable(single, (0.0, 0.0, 1.0))
    assert d == pytest.approx(1.0) and np.array_equal(q, pts[0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_nearest_traversable_matches_scan(seed):
    r = np.random.default_rng(seed)
    pts = r.uniform(0, 3, (300, 3))
    tset = make_traversable_set(pts)
    q = r.uniform(-1, 4, (50, 3))
    d, _ = tset.nearest(q)
    np.testing.assert_allclose(d, oracles.brute_distance(q, pts), rtol=0, atol=1e-12)


def test_surface_distance_is_height_over_floor(floor_env):
    tset = floor_env.tset
    q = np.array([[1.03, 2.07, 0.0], [2.55, 1.45, 0.4]])
    np.testing.assert_allclose(tset.surface_distance(q), [0.0, 0.4], atol=1e-6)


def test_ugv_field_ignores_the_floor(floor_env):
    # the drivable surface is not an obstacle for the ground robot
    assert floor_env.exact_ugv_distance(np.array([[4.0, 2.0, 0.0]]))[0] > 1.0
    assert floor_env.exact_uav_distance(np.array([[4.0, 2.0, 0.0]]))[0] < 1e-9
