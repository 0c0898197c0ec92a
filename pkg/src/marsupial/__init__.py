"""Path and trajectory planning for a tethered ground/aerial robot pair."""
from .config import OptimizerConfig, PlannerConfig, Thresholds, Weights
from .environment import Box, Environment, PointCloud, build_environment, load_point_cloud
from .metrics import MetricsReport, compute_metrics
from .optimizer import Trajectory, check_feasibility, optimize, prepare_initial_trajectory
from .planner import PlannedPath, plan
from .scenario import Scenario, export, load_scenario, run_pipeline
from .tether import check_catenary, sample_tether, solve_catenary

__version__ = "0.1.0"

__all__ = [
    "Box", "Environment", "MetricsReport", "OptimizerConfig", "PlannedPath", "PlannerConfig", "PointCloud",
    "Scenario", "Thresholds", "Trajectory", "Weights", "build_environment", "check_catenary",
    "check_feasibility", "compute_metrics", "export", "load_point_cloud", "load_scenario", "optimize", "plan",
    "prepare_initial_trajectory", "run_pipeline", "sample_tether", "solve_catenary",
]
