"""Scenario files, the plan/optimize pipeline and result export.

A scenario is a flat ``key = value`` file::

    name = corridor
    cloud = corridor.xyz          # relative to the scenario file
    bounds_min = -0.5, -0.5, -0.5
    bounds_max = 20.5, 4.5, 4.5
    start_ugv = 2, 2, 0
    start_uav = 2.5, 2, 2
    goal_uav = 18, 2, 2
    l_max = 5
"""
from __future__ import annotations

import dataclasses
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .config import OptimizerConfig, PlannerConfig, parse_kv, parse_vector
from .environment import Box, Environment, build_environment, load_point_cloud
from .errors import CatenaryLost, DivergedNumerically, NoSolution
from .metrics import MetricsReport, compute_metrics, speeds
from .optimizer import OptimizeResult, Trajectory, optimize, prepare_initial_trajectory, tether_polylines
from .planner import PlannedPath, plan

log = logging.getLogger(__name__)

REQUIRED = ("cloud", "bounds_min", "bounds_max", "start_ugv", "start_uav", "goal_uav", "l_max")
TRAJECTORY_HEADER = "i,t,xg,yg,zg,xa,ya,za,l,dt"
TETHER_HEADER = "i,j,xt,yt,zt"
PLOT_HEADER = "i,t,x,y,z,speed,clearance"


@dataclass(frozen=True)
class Scenario:
    name: str
    cloud_path: Path
    bounds: Box
    start_ugv: Tuple[float, float, float]
    start_uav: Tuple[float, float, float]
    goal_uav: Tuple[float, float, float]
    l_max: float

    def __post_init__(self):
        if not self.cloud_path.is_file():
            raise FileNotFoundError(f"point cloud {self.cloud_path} does not exist")
        for key in ("start_ugv", "start_uav", "goal_uav"):
            if not self.bounds.contains(getattr(self, key)):
                raise ValueError(f"{key} {getattr(self, key)} lies outside the bounds")
        if self.l_max <= 0:
            raise ValueError("l_max must be positive")


def load_scenario(path) -> Scenario:
    path = Path(path)
    kv = parse_kv(path.read_text(), str(path))
    missing = [k for k in REQUIRED if k not in kv]
    if missing:
        raise KeyError(f"{path}: missing keys {', '.join(missing)}")
    vec = {k: parse_vector(kv[k]) for k in ("bounds_min", "bounds_max", "start_ugv", "start_uav", "goal_uav")}
    return Scenario(
        name=kv.get("name", path.stem),
        cloud_path=(path.parent / kv["cloud"]).resolve(),
        bounds=Box(vec["bounds_min"], vec["bounds_max"]),
        start_ugv=vec["start_ugv"],
        start_uav=vec["start_uav"],
        goal_uav=vec["goal_uav"],
        l_max=float(kv["l_max"]),
    )


_ENV_CACHE: Dict[tuple, Environment] = {}


def scenario_environment(scenario: Scenario) -> Environment:
    """Build (once per cloud, bounds and start) the environment of a scenario."""
    key = (str(scenario.cloud_path), tuple(scenario.bounds.lo), tuple(scenario.bounds.hi), scenario.start_ugv)
    env = _ENV_CACHE.get(key)
    if env is None:
        cloud = load_point_cloud(scenario.cloud_path)
        env = build_environment(cloud, scenario.bounds, scenario.start_ugv)
        _ENV_CACHE[key] = env
    return env


@dataclass
class RunResult:
    scenario: str
    seed: int
    path: PlannedPath
    initial: Trajectory
    trajectory: Trajectory
    report: MetricsReport
    optimization: Optional[OptimizeResult] = field(default=None, repr=False)


def run_pipeline(scenario: Scenario, planner_cfg: Optional[PlannerConfig] = None,
                 opt_cfg: Optional[OptimizerConfig] = None, seed: int = 0,
                 skip_optimizer: bool = False, env: Optional[Environment] = None) -> RunResult:
    """Plan, time-parameterise, optimize and measure one run.

    Compute times exclude building the environment. Planning failures
    propagate as :class:`NoSolution`; a numerically diverged optimization is
    recorded in the report and the initial trajectory is kept.
    """
    planner_cfg = dataclasses.replace(planner_cfg or PlannerConfig(), rng_seed=seed, l_max=scenario.l_max)
    opt_cfg = opt_cfg or OptimizerConfig()
    env = env or scenario_environment(scenario)

    t0 = time.perf_counter()
    path = plan(scenario.start_ugv, scenario.start_uav, scenario.goal_uav, env, planner_cfg)
    initial = prepare_initial_trajectory(path, opt_cfg.v_g, opt_cfg.v_a, env, planner_cfg, opt_cfg.dt_min)
    tci = time.perf_counter() - t0

    result = None
    info: Dict[str, object] = {"skipped": skip_optimizer}
    t1 = time.perf_counter()
    if skip_optimizer:
        traj = initial
    else:
        try:
            result = optimize(initial, env, opt_cfg)
            traj = result.trajectory
            info.update(reason=result.reason, iterations=result.iterations, accepted=result.accepted,
                        initial_cost=result.initial_cost, final_cost=result.final_cost)
        except DivergedNumerically as exc:
            log.warning("seed %d: %s", seed, exc)
            traj = initial
            info.update(reason=f"diverged:{exc.family}")
    tco = time.perf_counter() - t1
    report = compute_metrics(initial, traj, env, opt_cfg, {"tci": tci, "tco": tco}, info)
    if str(info.get("reason", "")).startswith("diverged"):
        report.feasibility = False
    return RunResult(scenario.name, seed, path, initial, traj, report, result)


# --- export ----------------------------------------------------------------

def _fmt(x) -> str:
    return f"{float(x):.6f}"


def _exact(x) -> str:
    # shortest text that parses back to the same double
    return repr(float(x))


def _rows(header: str, rows) -> str:
    return header + "\n" + "".join(",".join(r) + "\n" for r in rows)


def trajectory_csv(traj: Trajectory) -> str:
    """Full-precision rows, so a re-read trajectory is bit-identical."""
    t = traj.times
    return _rows(TRAJECTORY_HEADER, (
        [str(i), _exact(t[i]), *map(_exact, traj.p_g[i]), *map(_exact, traj.p_a[i]), _exact(traj.l[i]), _exact(traj.dt[i])]
        for i in range(len(traj))
    ))


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(data[:, 2:5].copy(), data[:, 5:8].copy(), data[:, 8].copy(), data[:, 9].copy())


def tether_csv(traj: Trajectory, cfg: OptimizerConfig) -> str:
    samples = tether_polylines(traj, cfg.attach_z, cfg.tether_samples)
    return _rows(TETHER_HEADER, (
        [str(i), str(j), *map(_fmt, samples[i, j])]
        for i in range(samples.shape[0]) for j in range(samples.shape[1])
    ))


def plot_csv(P: np.ndarray, traj: Trajectory, clearance: np.ndarray) -> str:
    """Position, speed over the incoming segment and clearance against time."""
    v = np.concatenate([[0.0], speeds(P, traj.dt)])
    t = traj.times
    return _rows(PLOT_HEADER, (
        [str(i), _fmt(t[i]), *map(_fmt, P[i]), _fmt(v[i]), _fmt(clearance[i])] for i in range(len(P))
    ))


def export(run: RunResult, out_dir, env: Environment, cfg: Optional[OptimizerConfig] = None) -> List[Path]:
    """Write one run's trajectory, tether, metrics and plot data to ``out_dir``."""
    if out_dir is None or str(out_dir) == "":
        raise ValueError("output directory must not be empty")
    cfg = cfg or OptimizerConfig()
    out = Path(out_dir)
    traj = run.trajectory
    files = {
        "trajectory.csv": trajectory_csv(traj),
        "initial_trajectory.csv": trajectory_csv(run.initial),
        "tether.csv": tether_csv(traj, cfg),
        "ugv_plot.csv": plot_csv(traj.p_g, traj, env.exact_ugv_distance(traj.p_g)),
        "uav_plot.csv": plot_csv(traj.p_a, traj, env.exact_uav_distance(traj.p_a)),
        "metrics.json": run.report.to_json(),
    }
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in files.items():
            target = out / name
            target.write_text(text)
            written.append(target)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return written


def read_metrics(path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text()))


# --- batches ---------------------------------------------------------------

@dataclass
class BatchSummary:
    scenario: str
    runs: int
    planned: int
    feasible: int
    seeds: List[int]
    failures: Dict[int, str] = field(default_factory=dict)

    @property
    def planner_success(self) -> float:
        return 100.0 * self.planned / self.runs if self.runs else 0.0

    @property
    def feasibility(self) -> float:
        """Feasible runs over all runs, in percent."""
        return 100.0 * self.feasible / self.runs if self.runs else 0.0

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["failures"] = {str(k): v for k, v in sorted(self.failures.items())}
        d["planner_success"] = round(self.planner_success, 3)
        d["feasibility"] = round(self.feasibility, 3)
        return d


def summarize(name: str, seeds: List[int], results: List[RunResult], failures: Dict[int, str]) -> BatchSummary:
    return BatchSummary(name, len(seeds), len(results), sum(r.report.feasibility for r in results),
                        sorted(seeds), dict(failures))


def run_batch(scenario: Scenario, seeds, planner_cfg: Optional[PlannerConfig] = None,
              opt_cfg: Optional[OptimizerConfig] = None, skip_optimizer: bool = False,
              out_dir=None) -> Tuple[BatchSummary, List[RunResult]]:
    """Run the pipeline once per seed; results come back sorted by seed."""
    opt_cfg = opt_cfg or OptimizerConfig()
    env = scenario_environment(scenario)
    seeds = sorted(int(s) for s in seeds)
    results, failures = [], {}
    for seed in seeds:
        try:
            run = run_pipeline(scenario, planner_cfg, opt_cfg, seed, skip_optimizer, env)
        except (NoSolution, CatenaryLost) as exc:
            failures[seed] = str(exc)
            continue
        results.append(run)
        if out_dir is not None:
            export(run, Path(out_dir) / f"seed_{seed}", env, opt_cfg)
    summary = summarize(scenario.name, seeds, results, failures)
    if out_dir is not None:
        Path(out_dir, "summary.json").write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
    return summary, results


def batch_means(results: List[RunResult]) -> Dict[str, float]:
    """Seed-averaged headline numbers of a batch."""
    if not results:
        return {}
    get = lambda f: float(np.mean([f(r.report) for r in results]))  # noqa: E731
    return {
        "vti_uav": get(lambda m: m.vti["uav"]["mean"]),
        "vto_uav": get(lambda m: m.vto["uav"]["mean"]),
        "vti_ugv": get(lambda m: m.vti["ugv"]["mean"]),
        "vto_ugv": get(lambda m: m.vto["ugv"]["mean"]),
        "ato_uav_abs": get(lambda m: m.ato["uav"]["mean_abs"]),
        "ato_ugv_abs": get(lambda m: m.ato["ugv"]["mean_abs"]),
        "tci": get(lambda m: m.tci),
        "tco": get(lambda m: m.tco),
    }

