import json
import subprocess
import sys

import numpy as np
import pytest

from marsupial.cli import build_parser, main
from marsupial.environment import PointCloud, save_point_cloud
from marsupial.synthetic import dedupe, plane_z

SCENARIO = """\
cloud = floor.xyz
bounds_min = -0.5, -0.5, -0.5
bounds_max = 6.5, 4.5, 4.0
start_ugv = 1, 2, 0
start_uav = 1.5, 2, 2.2
goal_uav = 4, 2, 2.2
l_max = 4
"""


@pytest.fixture(scope="module")
def scenario(tmp_path_factory):
    folder = tmp_path_factory.mktemp("cli")
    save_point_cloud(PointCloud(dedupe(plane_z(0, 6, 0, 4, 0.0, 0.1))), folder / "floor.xyz")
    path = folder / "floor.scenario"
    path.write_text(SCENARIO)
    return path


def test_parser_defaults():
    args = build_parser().parse_args(["plan", "--scenario", "x", "--out", "o"])
    assert args.seed == 0 and args.runs == 1 and args.max_rrt_iters == 50_000 and args.max_opt_iters == 1000
    assert not args.skip_optimizer and args.params is None


def test_plan_writes_results(scenario, tmp_path, capsys):
    out = tmp_path / "res"
    code = main(["plan", "--scenario", str(scenario), "--seed", "2", "--runs", "2",
                 "--max-opt-iters", "20", "--out", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert "seed 2:" in text and "seed 3:" in text and "planned 2/2" in text
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seeds"] == [2, 3]
    assert (out / "seed_3" / "metrics.json").is_file()


def test_skip_optimizer_and_params(scenario, tmp_path):
    params = tmp_path / "p.txt"
    params.write_text("optimizer.v_a = 0.5\nplanner.w_yaw = 0.0\n")
    base, slow = tmp_path / "base", tmp_path / "slow"
    assert main(["plan", "--scenario", str(scenario), "--skip-optimizer", "--out", str(base)]) == 0
    assert main(["plan", "--scenario", str(scenario), "--skip-optimizer", "--params", str(params),
                 "--out", str(slow)]) == 0
    metrics = json.loads((slow / "seed_0" / "metrics.json").read_text())
    assert metrics["optimizer"]["skipped"] is True
    t_base = np.loadtxt(base / "seed_0" / "trajectory.csv", delimiter=",", skiprows=1, ndmin=2)[-1, 1]
    t_slow = np.loadtxt(slow / "seed_0" / "trajectory.csv", delimiter=",", skiprows=1, ndmin=2)[-1, 1]
    # a slower UAV stretches every step it limits
    assert t_slow > t_base


def test_failed_planning_returns_one(scenario, tmp_path, capsys):
    code = main(["plan", "--scenario", str(scenario), "--max-rrt-iters", "2", "--out", str(tmp_path)])
    assert code == 1
    assert "no path" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["--scenario", "missing.scenario", "--out", "o"],
    ["--scenario", "{scenario}", "--out", ""],
    ["--scenario", "{scenario}", "--runs", "0", "--out", "o"],
])
def test_bad_input_returns_two(scenario, argv, capsys):
    argv = [a.format(scenario=scenario) for a in argv]
    assert main(["plan", *argv]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_parameter(scenario, tmp_path, capsys):
    params = tmp_path / "p.txt"
    params.write_text("weights.nope = 1\n")
    assert main(["plan", "--scenario", str(scenario), "--params", str(params), "--out", str(tmp_path)]) == 2
    assert "nope" in capsys.readouterr().err


def test_module_entry_point(scenario, tmp_path):
    proc = subprocess.run([sys.executable, "-m", "marsupial", "plan", "--scenario", str(scenario),
                           "--skip-optimizer", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "feasible" in proc.stdout
