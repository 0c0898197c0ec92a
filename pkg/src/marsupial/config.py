"""Tunable parameters for the planner and the optimizer.

Defaults for the optimizer weights and thresholds are the values used in the
published simulation experiments; the planner defaults are our own choices
for metre-scale indoor worlds.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from .errors import ParseError


@dataclass(frozen=True)
class PlannerConfig:
    epsilon_g: float = 0.5
    epsilon_a: float = 0.5
    w_g: float = 1.5
    w_a: float = 1.0
    w_yaw: float = 0.2
    neighbor_radius: float = 1.5
    goal_tolerance: float = 0.3
    batch_size: int = 500
    max_iters: int = 50_000
    rng_seed: int = 0
    interp_step: float = 0.2
    l_max: float = 10.0
    delta_l: float = 0.1
    attach_z: float = 0.5
    uav_clearance: float = 1.3
    ugv_clearance: float = 1.3
    tether_clearance: float = 0.15
    goal_bias: float = 0.1
    root_yaw: float = 0.0
    sample_budget: int = 2000
    # interpolated ground positions must stay this close to the drivable set
    trav_tolerance: float = 0.3

    def __post_init__(self):
        positive = ("epsilon_g", "epsilon_a", "w_g", "w_a", "neighbor_radius", "goal_tolerance",
                    "batch_size", "max_iters", "interp_step", "l_max", "delta_l")
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.w_g <= self.w_a:
            raise ValueError("the UGV weight w_g must exceed the UAV weight w_a")
        if self.w_yaw < 0:
            raise ValueError("w_yaw must be non-negative")


@dataclass(frozen=True)
class Weights:
    eg: float = 0.2
    og: float = 0.08
    trav: float = 0.5
    sg: float = 0.12
    vg: float = 0.05
    ag: float = 0.005
    ea: float = 0.25
    oa: float = 0.08
    sa: float = 0.14
    va: float = 0.05
    aa: float = 0.005
    ot: float = 0.25
    u: float = 0.1

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"weight {f.name}={v} outside [0, 1]")


@dataclass(frozen=True)
class Thresholds:
    og: float = 1.2
    oa: float = 1.2
    ot: float = 0.1
    trav: float = 0.001
    sg: float = math.pi / 9
    sa: float = math.pi / 9
    vg: float = 1.0
    va: float = 1.0
    beta: float = 10.0
    # equidistance targets; None means "derive from the initial trajectory"
    eg: Optional[float] = None
    ea: Optional[float] = None

    def __post_init__(self):
        if self.beta <= 1.0:
            raise ValueError("beta must exceed 1")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 1000
    g_tol: float = 1e-8
    f_tol: float = 1e-8
    damping: float = 1e-4
    damping_factor: float = 10.0
    dt_min: float = 0.01
    cauchy_scale: float = 1.0
    fd_step: float = 1e-4
    v_g: float = 1.0
    v_a: float = 1.0
    attach_z: float = 0.5
    tether_samples: Optional[int] = None
    min_tether_distance: float = 1e-3
    # when False the UGV keeps the height of its initial waypoints (it drives
    # on the surface); when True z is a free variable like x and y
    ugv_height_free: bool = False
    # robot obstacle hinges activate this far outside the clearance thresholds,
    # so the balance against the tether term settles on the safe side
    hinge_margin: float = 0.3
    # reject steps that make a collision-free trajectory collide
    keep_feasible: bool = True
    weights: Weights = field(default_factory=Weights)
    thresholds: Thresholds = field(default_factory=Thresholds)


def parse_kv(text: str, source: str = "") -> Dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ParseError("empty key", lineno, source)
        out[key] = value
    return out


def parse_vector(value: str):
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {value!r}")
    return tuple(float(p) for p in parts)


def _coerce(template, value: str):
    if isinstance(template, bool):
        return value.lower() in ("1", "true", "yes")
    if isinstance(template, int):
        return int(value)
    return float(value)


def _replace(obj, key: str, value: str):
    names = {f.name: f for f in dataclasses.fields(obj)}
    if key not in names:
        raise KeyError(f"unknown parameter {key!r} for {type(obj).__name__}")
    current = getattr(obj, key)
    new = float(value) if current is None else _coerce(current, value)
    return dataclasses.replace(obj, **{key: new})


def apply_overrides(planner: PlannerConfig, optimizer: OptimizerConfig, params: Dict[str, str]):
    """Apply ``section.name = value`` overrides.

    Sections: ``planner``, ``optimizer``, ``weights``, ``thresholds``.
    """
    weights = optimizer.weights
    thresholds = optimizer.thresholds
    for key, value in params.items():
        section, _, name = key.partition(".")
        if section == "planner":
            planner = _replace(planner, name, value)
        elif section == "optimizer":
            optimizer = _replace(optimizer, name, value)
        elif section == "weights":
            weights = _replace(weights, name, value)
        elif section == "thresholds":
            thresholds = _replace(thresholds, name, value)
        else:
            raise KeyError(f"unknown parameter section in {key!r}")
    optimizer = dataclasses.replace(optimizer, weights=weights, thresholds=thresholds)
    return planner, optimizer


def load_params(path) -> Dict[str, str]:
    path = Path(path)
    return parse_kv(path.read_text(), str(path))
