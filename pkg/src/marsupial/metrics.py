"""Per-run statistics for comparing the initial and the optimized solution.

Field names follow the usual benchmark table columns: ``tci``/``tco`` are
compute times of the initial path and of the optimization, ``lip``/``lto``
path lengths, ``vti``/``vto`` and ``ati``/``ato`` speed and acceleration
statistics, ``doi``/``doo`` robot clearances and ``dcoi``/``dcoo`` tether
clearances (``i`` initial, ``o`` optimized).
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .config import OptimizerConfig
from .environment import Environment
from .optimizer import Trajectory, check_feasibility, polyline_length, tether_polylines

AGENTS = ("ugv", "uav")


def speeds(P: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Segment speeds ``|p[i+1] - p[i]| / dt[i+1]``."""
    if len(P) < 2:
        return np.zeros(0)
    return np.linalg.norm(np.diff(P, axis=0), axis=1) / dt[1:]


def accelerations(P: np.ndarray, dt: np.ndarray) -> np.ndarray:
    """Speed change between consecutive segments over their summed duration."""
    v = speeds(P, dt)
    if len(v) < 2:
        return np.zeros(0)
    return (v[1:] - v[:-1]) / (dt[1:-1] + dt[2:])


def _motion_stats(x: np.ndarray) -> Dict[str, float]:
    if x.size == 0:
        return {"mean": 0.0, "max": 0.0, "mean_abs": 0.0}
    return {"mean": float(x.mean()), "max": float(np.abs(x).max()), "mean_abs": float(np.abs(x).mean())}


def _distance_stats(d: np.ndarray) -> Dict[str, float]:
    d = np.ravel(d)
    return {"mean": float(d.mean()), "min": float(d.min())}


@dataclass
class SolutionStats:
    length: Dict[str, float]
    velocity: Dict[str, Dict[str, float]]
    acceleration: Dict[str, Dict[str, float]]
    clearance: Dict[str, Dict[str, float]]
    tether_clearance: Dict[str, float]
    feasible: bool


def solution_stats(traj: Trajectory, env: Environment, cfg: OptimizerConfig) -> SolutionStats:
    """Lengths, motion and clearance statistics of one trajectory.

    Clearances use exact point-cloud distances at the states and at the
    tether samples, so they agree with :func:`check_feasibility`.
    """
    paths = {"ugv": traj.p_g, "uav": traj.p_a}
    dist = {"ugv": env.exact_ugv_distance, "uav": env.exact_uav_distance}
    tether = env.exact_uav_distance(tether_polylines(traj, cfg.attach_z, cfg.tether_samples))
    return SolutionStats(
        length={a: polyline_length(P) for a, P in paths.items()},
        velocity={a: _motion_stats(speeds(P, traj.dt)) for a, P in paths.items()},
        acceleration={a: _motion_stats(accelerations(P, traj.dt)) for a, P in paths.items()},
        clearance={a: _distance_stats(dist[a](P)) for a, P in paths.items()},
        tether_clearance=_distance_stats(tether),
        feasible=check_feasibility(traj, env, cfg).feasible,
    )


@dataclass
class MetricsReport:
    feasibility: bool
    tci: float
    tco: float
    lip: Dict[str, float]
    lto: Dict[str, float]
    vti: Dict[str, Dict[str, float]]
    vto: Dict[str, Dict[str, float]]
    ati: Dict[str, Dict[str, float]]
    ato: Dict[str, Dict[str, float]]
    doi: Dict[str, Dict[str, float]]
    doo: Dict[str, Dict[str, float]]
    dcoi: Dict[str, float]
    dcoo: Dict[str, float]
    initial_feasibility: bool = True
    optimizer: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise KeyError(f"unknown metrics fields: {sorted(unknown)}")
        return cls(**d)


def compute_metrics(initial: Trajectory, optimized: Trajectory, env: Environment,
                    cfg: Optional[OptimizerConfig] = None, timings: Optional[Dict[str, float]] = None,
                    optimizer_info: Optional[Dict[str, object]] = None) -> MetricsReport:
    """Compare an initial and an optimized trajectory.

    ``timings`` holds ``tci`` and ``tco`` in seconds; they are stored with
    millisecond resolution.
    """
    cfg = cfg or OptimizerConfig()
    timings = timings or {}
    a = solution_stats(initial, env, cfg)
    b = a if optimized is initial else solution_stats(optimized, env, cfg)
    return MetricsReport(
        feasibility=b.feasible,
        tci=round(max(float(timings.get("tci", 0.0)), 0.0), 3),
        tco=round(max(float(timings.get("tco", 0.0)), 0.0), 3),
        lip=a.length, lto=b.length,
        vti=a.velocity, vto=b.velocity,
        ati=a.acceleration, ato=b.acceleration,
        doi=a.clearance, doo=b.clearance,
        dcoi=a.tether_clearance, dcoo=b.tether_clearance,
        initial_feasibility=a.feasible,
        optimizer=dict(optimizer_info or {}),
    )
