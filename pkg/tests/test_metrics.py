import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from marsupial.config import OptimizerConfig
from marsupial.metrics import MetricsReport, accelerations, compute_metrics, speeds
from marsupial.optimizer import Trajectory, tether_polylines


def line(n, spacing=1.0, dt=1.0, z=2.5):
    x = 1.0 + spacing * np.arange(n)
    p_g = np.column_stack([x, np.full(n, 2.0), np.zeros(n)])
    p_a = p_g + [0.5, 0.0, z]
    dts = np.full(n, dt)
    dts[0] = 0.0
    return Trajectory(p_g, p_a, np.linalg.norm(p_a - p_g - [0, 0, 0.5], axis=1) + 0.3, dts)


def test_speeds_and_accelerations():
    P = np.array([[0, 0, 0], [1, 0, 0], [3, 0, 0]], float)
    dt = np.array([0.0, 1.0, 1.0])
    np.testing.assert_allclose(speeds(P, dt), [1.0, 2.0])
    np.testing.assert_allclose(accelerations(P, dt), [0.5])
    assert speeds(P[:1], dt[:1]).size == 0 and accelerations(P[:2], dt[:2]).size == 0


def test_uniform_motion(floor_env):
    m = compute_metrics(line(6), line(6), floor_env)
    for agent in ("ugv", "uav"):
        assert m.vto[agent]["mean"] == pytest.approx(1.0)
        assert m.vto[agent]["max"] == pytest.approx(1.0)
        assert m.ato[agent]["mean"] == pytest.approx(0.0, abs=1e-12)
        assert m.ato[agent]["max"] == pytest.approx(0.0, abs=1e-12)
        assert m.lto[agent] == pytest.approx(5.0)


def test_pass_through_has_no_deltas(floor_env):
    traj = line(5, spacing=0.7, dt=1.3)
    traj.p_a[2, 2] += 0.4
    m = compute_metrics(traj, traj, floor_env, timings={"tci": 0.5, "tco": 0.0})
    assert m.vti == m.vto and m.ati == m.ato and m.lip == m.lto
    assert m.doi == m.doo and m.dcoi == m.dcoo
    assert m.feasibility == m.initial_feasibility


def test_clearances_match_brute_force(floor_env, rng):
    cfg = OptimizerConfig()
    traj = line(6)
    traj.p_a += rng.uniform(-0.5, 0.5, traj.p_a.shape)
    m = compute_metrics(traj, traj, floor_env, cfg)
    pts = floor_env.cloud.points
    d_a = oracles.brute_distance(traj.p_a, pts)
    d_g = oracles.brute_distance(traj.p_g, floor_env.obstacle_points)
    d_t = oracles.brute_distance(tether_polylines(traj, cfg.attach_z).reshape(-1, 3), pts)
    tol = math.sqrt(3) * floor_env.edf.resolution
    assert m.doo["uav"]["min"] == pytest.approx(d_a.min(), abs=tol)
    assert m.doo["uav"]["mean"] == pytest.approx(d_a.mean(), abs=tol)
    # the whole floor is drivable, so nothing limits the ground robot but the grid
    assert np.isinf(d_g).all()
    assert m.doo["ugv"]["min"] == float(floor_env.ugv_edf.distances.max())
    assert m.dcoo["min"] == pytest.approx(d_t.min(), abs=tol)
    assert m.dcoo["mean"] == pytest.approx(d_t.mean(), abs=tol)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 6))
def test_statistics_are_consistent(floor_env, seed, n):
    r = np.random.default_rng(seed)
    traj = line(n)
    traj.p_a += r.uniform(-0.5, 0.5, traj.p_a.shape)
    traj.dt[1:] = r.uniform(0.2, 2.0, n - 1)
    m = compute_metrics(traj, traj, floor_env, timings={"tci": r.uniform(0, 5), "tco": r.uniform(0, 5)})
    for stats in (m.doo["ugv"], m.doo["uav"], m.dcoo):
        assert stats["min"] <= stats["mean"] + 1e-12
    assert all(v >= 0 for v in m.lto.values())
    for agent in ("ugv", "uav"):
        assert m.vto[agent]["mean"] <= m.vto[agent]["max"] + 1e-12
        assert m.ato[agent]["mean_abs"] <= m.ato[agent]["max"] + 1e-12
    for t in (m.tci, m.tco):
        assert t >= 0 and round(t, 3) == t


def test_negative_timings_are_clamped(floor_env):
    m = compute_metrics(line(2), line(2), floor_env, timings={"tci": -1e-9, "tco": 1.23456})
    assert m.tci == 0.0 and m.tco == 1.235


def test_report_round_trip(floor_env):
    m = compute_metrics(line(4), line(4), floor_env, optimizer_info={"reason": "cost"})
    again = MetricsReport.from_dict(json.loads(m.to_json()))
    assert again == m


def test_unknown_field_is_rejected(floor_env):
    d = compute_metrics(line(2), line(2), floor_env).to_dict()
    d["bogus"] = 1
    with pytest.raises(KeyError):
        MetricsReport.from_dict(d)
