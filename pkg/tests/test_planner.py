import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from marsupial.config import PlannerConfig
from marsupial.environment import Box, PointCloud, build_environment, make_traversable_set
from marsupial.errors import InfeasibleStart, SamplingExhausted
from marsupial.planner import (PathState, Planner, Tree, edge_cost, nearest, nearest_index, path_cost, plan,
                               sample_state, validate_tree)
from marsupial.synthetic import box_surface, dedupe, plane_x, plane_y, plane_z, remove_box
from marsupial.tether import check_catenary


@pytest.fixture(scope="module")
def boxed_env():
    """Floor with a closed-sided box hanging over it, open at the bottom."""
    floor = plane_z(0, 8, 0, 4, 0.0, 0.1)
    shell = box_surface((2.5, 0.5, 1.2), (5.5, 3.5, 4.0), 0.1)
    shell = remove_box(shell, (2.55, 0.55, 1.1), (5.45, 3.45, 1.3))
    pts = dedupe(np.vstack([floor, shell]))
    return build_environment(PointCloud(pts), Box((-0.5, -0.5, -0.5), (8.5, 4.5, 4.5)), (1.0, 2.0, 0.0))


@pytest.fixture(scope="module")
def wall_env():
    """Floor split by a half-width wall the tether cannot cross low."""
    floor = plane_z(0, 10, 0, 6, 0.0, 0.1)
    wall = np.vstack([plane_x(0, 3, 0, 3, 5.0, 0.1), plane_y(4.9, 5.1, 0, 3, 3.0, 0.1)])
    pts = dedupe(np.vstack([floor, wall]))
    return build_environment(PointCloud(pts), Box((-0.5, -0.5, -0.5), (10.5, 6.5, 5.0)), (1.5, 1.0, 0.0))


def test_goal_at_start_is_trivial(floor_env):
    path = plan((1, 2, 0), (1.5, 2, 2), (1.5, 2, 2), floor_env, PlannerConfig(l_max=5))
    assert len(path.states) == 1 and path.cost == 0.0


def test_infeasible_start(floor_env):
    with pytest.raises(InfeasibleStart):
        plan((1, 2, 0), (1.5, 2, 0.5), (5, 2, 2), floor_env, PlannerConfig(l_max=5))


def test_open_space_path_is_nearly_straight(floor_env):
    start_a, goal = np.array([0.2, 2.0, 2.0]), np.array([8.2, 2.0, 2.0])
    ratios = []
    for seed in range(20):
        path = plan((0.5, 2, 0), start_a, goal, floor_env, PlannerConfig(l_max=10, rng_seed=seed))
        uav = path.uav
        assert np.linalg.norm(uav[-1] - goal) <= 0.3
        ratios.append(np.linalg.norm(np.diff(uav, axis=0), axis=1).sum() / np.linalg.norm(goal - start_a))
    assert max(ratios) <= 1.3


def test_ugv_moves_before_uav_crosses_wall(wall_env):
    cfg = PlannerConfig(l_max=6, rng_seed=3)
    start_g, start_a, goal = np.array([1.5, 1.0, 0.0]), np.array([2.0, 1.5, 2.0]), np.array([8.0, 1.5, 1.6])
    # exhaustive oracle: from the start UGV position no tether reaches the far side
    field = oracles.BruteField(wall_env.cloud.points)
    attach = start_g + [0, 0, cfg.attach_z]
    assert check_catenary(attach, goal, field, cfg.l_max, cfg.delta_l, None, cfg.tether_clearance) is None
    path = plan(start_g, start_a, goal, wall_env, cfg)
    crossed = int(np.argmax(path.uav[:, 0] > 5.0))
    assert crossed > 0
    assert np.linalg.norm(path.ugv[crossed] - start_g) > 1.0


def test_sample_singleton_tset(floor_env, rng):
    tset = make_traversable_set(np.array([[1.0, 2.0, 0.0]]))
    for _ in range(20):
        p_g, p_a = sample_state(tset, floor_env.bounds, floor_env, rng, PlannerConfig())
        assert np.array_equal(p_g, [1.0, 2.0, 0.0])
        assert floor_env.edf.distance(p_a) > 1.3


def test_sample_exhausted(floor_env, rng):
    tiny = Box((0, 0, -0.2), (8, 4, 0.2))
    with pytest.raises(SamplingExhausted):
        sample_state(floor_env.tset, tiny, floor_env, rng, PlannerConfig(sample_budget=256))


def test_sample_ground_uniform(floor_env, rng):
    # counts per half of the floor stay within 3 binomial sigmas of the share
    tset = floor_env.tset
    n = 10_000
    left = np.mean(tset.points[:, 0] < 4.0)
    hits = 0
    for _ in range(n):
        p_g, _ = sample_state(tset, floor_env.bounds, floor_env, rng, PlannerConfig())
        hits += p_g[0] < 4.0
    sigma = math.sqrt(n * left * (1 - left))
    assert abs(hits - n * left) < 3 * sigma


def _tree(nodes_g, nodes_a, yaws):
    t = Tree(capacity=4)
    for g, a, y in zip(nodes_g, nodes_a, yaws):
        t.add(g, a, y, 1.0, 0.0, 0 if t.n else -1)
    return t


def test_nearest_single_and_tie():
    cfg = PlannerConfig(w_yaw=0.0)
    t = _tree([[0, 0, 0]], [[0, 0, 1]], [0.0])
    assert nearest(t, (5, 5, 0), (5, 5, 1), cfg).id == 0
    t = _tree([[1, 0, 0], [2, 0, 0]], [[0, 1, 1], [0, -1, 1]], [0.0, 0.0])
    assert nearest(t, (0, 0, 0), (0, 0, 1), cfg).id == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_nearest_matches_linear_scan(seed):
    r = np.random.default_rng(seed)
    cfg = PlannerConfig()
    G = r.uniform(0, 5, (50, 3))
    A = r.uniform(0, 5, (50, 3))
    Y = r.uniform(-np.pi, np.pi, 50)
    t = _tree(G, A, Y)
    for _ in range(100):
        qg, qa = r.uniform(0, 5, 3), r.uniform(0, 5, 3)
        want = oracles.nearest_node(G, A, Y, qg, qa, cfg.w_g, cfg.w_a, cfg.w_yaw)
        assert nearest_index(t, qg, qa, cfg) == want


def test_mode_one_in_open_space(floor_env):
    pl = Planner(floor_env, PlannerConfig(l_max=6))
    t = _tree([[1, 2, 0]], [[1.5, 2, 2]], [0.0])
    p_g, p_a, _, mode = pl.steering(t, 0, np.array([3.0, 2, 0]), np.array([4.0, 2, 2]))
    assert mode == 1 and np.array_equal(p_g, t.p_g[0])
    assert np.linalg.norm(p_a - t.p_a[0]) == pytest.approx(0.5)


def test_mode_two_when_tether_too_short(floor_env):
    cfg = PlannerConfig(l_max=2.6)
    pl = Planner(floor_env, cfg)
    t = _tree([[1, 2, 0]], [[3, 2, 2]], [0.0])
    p_g, p_a, length, mode = pl.steering(t, 0, np.array([3.0, 2, 0]), np.array([5.0, 2, 2]))
    assert mode == 2
    # replay the mode predicates independently
    field = oracles.BruteField(floor_env.cloud.points)
    mode1_a = t.p_a[0] + np.array([0.5, 0, 0])
    assert check_catenary(t.p_g[0] + [0, 0, 0.5], mode1_a, field, cfg.l_max, cfg.delta_l) is None
    assert check_catenary(p_g + [0, 0, 0.5], p_a, field, cfg.l_max, cfg.delta_l) is not None
    assert oracles.brute_distance(p_a, floor_env.cloud.points)[0] > cfg.uav_clearance


def test_mode_three_when_uav_boxed(boxed_env):
    pl = Planner(boxed_env, PlannerConfig(l_max=4))
    t = _tree([[4, 2, 0]], [[4, 2, 2.5]], [0.0])
    assert pl.state_feasible(t.p_g[0], t.p_a[0])
    p_g, p_a, _, mode = pl.steering(t, 0, np.array([5.0, 2, 0]), np.array([6.0, 2, 2.5]))
    assert mode == 3 and np.array_equal(p_a, t.p_a[0])


def test_obstacle_free_basic(floor_env):
    pl = Planner(floor_env, PlannerConfig(l_max=6))
    g, a = np.array([1.0, 2, 0]), np.array([1.5, 2, 2])
    assert pl.obstacle_free(g, a, g, a)
    assert pl.obstacle_free(g, a, g + [1, 0, 0], a + [2, 0, 0])


def test_obstacle_free_rejects_thin_wall():
    floor = plane_z(0, 8, 0, 4, 0.0, 0.1)
    wall = plane_x(0, 4, 1.0, 4.0, 4.0, 0.05)
    pts = dedupe(np.vstack([floor, wall]))
    env = build_environment(PointCloud(pts), Box((-0.5, -0.5, -0.5), (8.5, 4.5, 4.5)), (1.0, 2.0, 0.0))
    pl = Planner(env, PlannerConfig(l_max=8))
    g = np.array([1.0, 2, 0])
    a0, a1 = np.array([2.5, 2, 2.5]), np.array([5.5, 2, 2.5])
    dense = np.linspace(0, 1, int(np.linalg.norm(a1 - a0) / 0.01) + 1)[:, None] * (a1 - a0) + a0
    assert np.any(oracles.brute_distance(dense, pts) <= 1.3)
    assert not pl.obstacle_free(g, a0, g, a1)


def test_path_cost_examples():
    cfg = PlannerConfig()
    s0 = PathState(np.zeros(3), np.zeros(3), 1.0)
    s1 = PathState(np.array([1.0, 0, 0]), np.array([0, 2.0, 0]), 1.0)
    assert path_cost([s0], cfg) == 0.0
    assert path_cost([s0, s1], cfg) == pytest.approx(3.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(2, 6), st.integers(2, 6))
def test_path_cost_additive(seed, na, nb):
    r = np.random.default_rng(seed)
    cfg = PlannerConfig()
    states = [PathState(r.normal(size=3), r.normal(size=3), 1.0) for _ in range(na + nb - 1)]
    A, B = states[:na], states[na - 1:]
    assert path_cost(states, cfg) == pytest.approx(path_cost(A, cfg) + path_cost(B, cfg), rel=1e-12)


def test_plan_invariants_and_determinism(floor_env):
    cfg = PlannerConfig(l_max=6, rng_seed=7)
    args = ((1, 2, 0), (1.5, 2, 2), (7.0, 1.0, 2.5), floor_env, cfg)
    a = plan(*args)
    b = plan(*args)
    assert np.array_equal(a.ugv, b.ugv) and np.array_equal(a.uav, b.uav) and a.cost == b.cost
    pl = Planner(floor_env, cfg)
    assert validate_tree(a.tree, pl) == []
    for s, t in zip(a.states[:-1], a.states[1:]):
        assert pl.obstacle_free(s.p_g, s.p_a, t.p_g, t.p_a)
        assert t.tether_len >= np.linalg.norm(t.p_a - pl.attach(t.p_g)) - 1e-9
    assert np.allclose(a.states[0].p_g, (1, 2, 0)) and np.allclose(a.states[0].p_a, (1.5, 2, 2))
    finite = [c for c in a.cost_history if math.isfinite(c)]
    assert all(x >= y for x, y in zip(finite, finite[1:]))
    assert a.cost == pytest.approx(path_cost(a.states, cfg))


def test_edge_cost_weights():
    cfg = PlannerConfig(w_g=2.0, w_a=1.0)
    assert edge_cost((0, 0, 0), (0, 0, 0), (1, 0, 0), (0, 3, 0), cfg) == pytest.approx(5.0)
