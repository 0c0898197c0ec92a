"""RRT* over the joint UGV/UAV position space with a catenary-feasible tether.

The tree lives in six dimensions (ground and aerial positions). The tether
length is not sampled: each new node gets the shortest collision-free
length found by :func:`marsupial.tether.check_catenary`.
"""
from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .config import PlannerConfig
from .environment import Environment
from .errors import InfeasibleStart, NoSolution, SamplingExhausted
from .tether import check_catenary

UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PlannerNode:
    id: int
    p_g: np.ndarray
    p_a: np.ndarray
    yaw_g: float
    tether_len: float
    cost: float
    parent: Optional[int]


@dataclass(frozen=True)
class PathState:
    p_g: np.ndarray
    p_a: np.ndarray
    tether_len: float


@dataclass
class PlannedPath:
    states: List[PathState]
    cost: float
    iterations: int
    wall_time: float
    tree_size: int = 0
    cost_history: List[float] = field(default_factory=list)
    tree: Optional["Tree"] = field(default=None, repr=False, compare=False)

    @property
    def ugv(self) -> np.ndarray:
        return np.array([s.p_g for s in self.states])

    @property
    def uav(self) -> np.ndarray:
        return np.array([s.p_a for s in self.states])

    @property
    def lengths(self) -> np.ndarray:
        return np.array([s.tether_len for s in self.states])


def wrap_angle(a):
    return (np.asarray(a) + np.pi) % (2.0 * np.pi) - np.pi


class Tree:
    """Growable struct-of-arrays storage for RRT* nodes."""

    def __init__(self, capacity: int = 1024):
        self.n = 0
        self.p_g = np.empty((capacity, 3))
        self.p_a = np.empty((capacity, 3))
        self.yaw = np.empty(capacity)
        self.length = np.empty(capacity)
        self.cost = np.empty(capacity)
        self.parent = np.empty(capacity, dtype=np.intp)
        self.children: List[List[int]] = []

    def _grow(self):
        cap = 2 * len(self.cost)
        for name in ("p_g", "p_a", "yaw", "length", "cost", "parent"):
            old = getattr(self, name)
            new = np.empty((cap,) + old.shape[1:], dtype=old.dtype)
            new[: self.n] = old[: self.n]
            setattr(self, name, new)

    def add(self, p_g, p_a, yaw, length, cost, parent: int) -> int:
        if self.n == len(self.cost):
            self._grow()
        i = self.n
        self.p_g[i] = p_g
        self.p_a[i] = p_a
        self.yaw[i] = yaw
        self.length[i] = length
        self.cost[i] = cost
        self.parent[i] = parent
        self.children.append([])
        if parent >= 0:
            self.children[parent].append(i)
        self.n += 1
        return i

    def node(self, i: int) -> PlannerNode:
        parent = int(self.parent[i])
        return PlannerNode(
            id=i,
            p_g=self.p_g[i].copy(),
            p_a=self.p_a[i].copy(),
            yaw_g=float(self.yaw[i]),
            tether_len=float(self.length[i]),
            cost=float(self.cost[i]),
            parent=None if parent < 0 else parent,
        )

    def __len__(self) -> int:
        return self.n

    def path_to(self, i: int) -> List[int]:
        out = []
        while i >= 0:
            out.append(i)
            i = int(self.parent[i])
        return out[::-1]


def edge_cost(pg0, pa0, pg1, pa1, cfg: PlannerConfig) -> float:
    return cfg.w_g * float(np.linalg.norm(np.subtract(pg1, pg0))) + cfg.w_a * float(np.linalg.norm(np.subtract(pa1, pa0)))


def path_cost(states: Sequence, cfg: PlannerConfig) -> float:
    """Weighted UGV + UAV polyline length of a path of states."""
    if len(states) == 0:
        raise ValueError("empty path")
    total = 0.0
    for a, b in zip(states[:-1], states[1:]):
        total += edge_cost(a.p_g, a.p_a, b.p_g, b.p_a, cfg)
    return total


def heading_yaw(p_from, p_to, fallback: float) -> float:
    d = np.subtract(p_to, p_from)
    if math.hypot(d[0], d[1]) < 1e-9:
        return fallback
    return math.atan2(d[1], d[0])


class Planner:
    """Feasibility predicates and tree operations bound to one world."""

    def __init__(self, env: Environment, cfg: PlannerConfig):
        self.env = env
        self.cfg = cfg

    # --- state predicates -------------------------------------------------
    def attach(self, p_g) -> np.ndarray:
        return np.asarray(p_g, dtype=float) + self.cfg.attach_z * UP

    def uav_free(self, p_a) -> np.ndarray:
        return self.env.edf.distance(p_a) > self.cfg.uav_clearance

    def ugv_free(self, p_g) -> np.ndarray:
        p = np.atleast_2d(p_g)
        ok = self.env.ugv_edf.distance(p) > self.cfg.ugv_clearance
        d_trav, _ = self.env.tset.nearest(p)
        ok &= d_trav <= self.cfg.trav_tolerance
        return ok if np.ndim(p_g) > 1 else bool(ok[0])

    def tether_length(self, p_g, p_a) -> Optional[float]:
        cfg = self.cfg
        return check_catenary(self.attach(p_g), p_a, self.env.edf, cfg.l_max, cfg.delta_l, None, cfg.tether_clearance)

    def state_feasible(self, p_g, p_a) -> bool:
        return bool(self.uav_free(p_a)) and self.ugv_free(p_g) and self.tether_length(p_g, p_a) is not None

    # --- tree operations --------------------------------------------------
    def sample_state(self, rng: np.random.Generator, bounds=None):
        return sample_state(self.env.tset, bounds or self.env.bounds, self.env, rng, self.cfg)

    def nearest(self, tree: Tree, p_g, p_a) -> int:
        return nearest_index(tree, p_g, p_a, self.cfg)

    def obstacle_free(self, pg0, pa0, pg1, pa1) -> bool:
        """Interpolate the joint state and test robots plus tether at each step."""
        pg0, pa0, pg1, pa1 = (np.asarray(v, dtype=float) for v in (pg0, pa0, pg1, pa1))
        span = max(np.linalg.norm(pg1 - pg0), np.linalg.norm(pa1 - pa0))
        if span == 0.0:
            return True
        steps = max(1, int(math.ceil(span / self.cfg.interp_step)))
        t = (np.arange(1, steps + 1) / steps)[:, None]
        pg = pg0 + t * (pg1 - pg0)
        pa = pa0 + t * (pa1 - pa0)
        if not np.all(self.uav_free(pa)):
            return False
        if not np.all(self.ugv_free(pg)):
            return False
        # tether checks are the expensive part; start from the far end
        for k in range(steps - 1, -1, -1):
            if self.tether_length(pg[k], pa[k]) is None:
                return False
        return True

    def steer_toward(self, p, target, eps):
        d = target - p
        n = float(np.linalg.norm(d))
        if n <= eps:
            return target.copy()
        return p + d * (eps / n)

    def steering(self, tree: Tree, near: int, rand_g, rand_a):
        """Try the three steering modes in priority order.

        Returns ``(p_g, p_a, tether_len, mode)`` or None when no mode yields
        a feasible extension.
        """
        cfg = self.cfg
        pg0 = tree.p_g[near]
        pa0 = tree.p_a[near]
        pa_step = self.steer_toward(pa0, np.asarray(rand_a, dtype=float), cfg.epsilon_a)
        pg_raw = self.steer_toward(pg0, np.asarray(rand_g, dtype=float), cfg.epsilon_g)
        _, pg_proj = self.env.tset.nearest(pg_raw[None, :])
        pg_step = pg_proj[0]
        ugv_moves = not np.array_equal(pg_step, pg0)
        uav_moves = not np.array_equal(pa_step, pa0)

        candidates = []
        if uav_moves:
            candidates.append((1, pg0, pa_step))
        if ugv_moves and uav_moves:
            candidates.append((2, pg_step, pa_step))
        if ugv_moves:
            candidates.append((3, pg_step, pa0))
        for mode, pg, pa in candidates:
            if not self.uav_free(pa) or not self.ugv_free(pg):
                continue
            length = self.tether_length(pg, pa)
            if length is None:
                continue
            if self.obstacle_free(pg0, pa0, pg, pa):
                return pg.copy(), pa.copy(), length, mode
        return None

    def neighbors(self, tree: Tree, p_g, p_a) -> np.ndarray:
        n = tree.n
        d2 = np.sum((tree.p_g[:n] - p_g) ** 2, axis=1) + np.sum((tree.p_a[:n] - p_a) ** 2, axis=1)
        return np.flatnonzero(d2 <= self.cfg.neighbor_radius ** 2)

    def edge_costs(self, tree: Tree, idx, p_g, p_a) -> np.ndarray:
        cfg = self.cfg
        return cfg.w_g * np.linalg.norm(tree.p_g[idx] - p_g, axis=1) + cfg.w_a * np.linalg.norm(tree.p_a[idx] - p_a, axis=1)

    def _propagate(self, tree: Tree, root: int, delta: float) -> None:
        queue = deque(tree.children[root])
        while queue:
            j = queue.popleft()
            tree.cost[j] -= delta
            p = tree.parent[j]
            tree.yaw[j] = heading_yaw(tree.p_g[p], tree.p_g[j], tree.yaw[p])
            queue.extend(tree.children[j])

    def rewire(self, tree: Tree, new: int, nbrs: np.ndarray) -> int:
        """Re-parent neighbours through ``new`` when that is cheaper."""
        changed = 0
        nbrs = nbrs[nbrs != tree.parent[new]]
        if nbrs.size == 0:
            return 0
        through = tree.cost[new] + self.edge_costs(tree, nbrs, tree.p_g[new], tree.p_a[new])
        for j, c in zip(nbrs, through):
            j = int(j)
            if j == new or c >= tree.cost[j] - 1e-12:
                continue
            if not self.obstacle_free(tree.p_g[new], tree.p_a[new], tree.p_g[j], tree.p_a[j]):
                continue
            old_parent = int(tree.parent[j])
            tree.children[old_parent].remove(j)
            tree.children[new].append(j)
            tree.parent[j] = new
            delta = tree.cost[j] - c
            tree.cost[j] = c
            tree.yaw[j] = heading_yaw(tree.p_g[new], tree.p_g[j], tree.yaw[new])
            self._propagate(tree, j, delta)
            changed += 1
        return changed


def sample_state(tset, bounds, env: Environment, rng: np.random.Generator, cfg: PlannerConfig):
    """Ground position from the drivable set, aerial position from free space."""
    if len(tset) == 0:
        raise ValueError("empty traversable set")
    p_g = tset.points[int(rng.integers(len(tset)))].copy()
    drawn = 0
    batch = 64
    while drawn < cfg.sample_budget:
        cand = rng.uniform(bounds.lo, bounds.hi, size=(batch, 3))
        ok = env.edf.distance(cand) > cfg.uav_clearance
        if ok.any():
            return p_g, cand[int(np.argmax(ok))]
        drawn += batch
    raise SamplingExhausted(f"no free UAV sample in {cfg.sample_budget} draws")


def nearest_index(tree: Tree, p_g, p_a, cfg: PlannerConfig) -> int:
    """Node minimising the weighted UGV/UAV distance plus the heading term.

    ``np.argmin`` returns the first minimum, so ties go to the lowest id.
    """
    n = tree.n
    dg = tree.p_g[:n] - p_g
    cost = cfg.w_g * np.linalg.norm(dg, axis=1) + cfg.w_a * np.linalg.norm(tree.p_a[:n] - p_a, axis=1)
    if cfg.w_yaw > 0:
        hx = -dg[:, 0]
        hy = -dg[:, 1]
        has_heading = np.hypot(hx, hy) >= 1e-9
        heading = np.arctan2(hy, hx)
        yaw_term = np.abs(wrap_angle(tree.yaw[:n] - heading))
        cost = cost + cfg.w_yaw * np.where(has_heading, yaw_term, 0.0)
    return int(np.argmin(cost))


def nearest(tree: Tree, p_g, p_a, cfg: PlannerConfig) -> PlannerNode:
    if tree.n == 0:
        raise ValueError("empty tree")
    return tree.node(nearest_index(tree, np.asarray(p_g, float), np.asarray(p_a, float), cfg))


def plan(start_g, start_a, goal_uav, env: Environment, cfg: PlannerConfig, start_len: Optional[float] = None) -> PlannedPath:
    """Grow the tree in batches until a batch ends with the goal reached."""
    t0 = time.perf_counter()
    pl = Planner(env, cfg)
    start_g = np.asarray(start_g, dtype=float)
    start_a = np.asarray(start_a, dtype=float)
    goal = np.asarray(goal_uav, dtype=float)

    if not pl.uav_free(start_a):
        raise InfeasibleStart("UAV start is inside the obstacle clearance")
    if pl.env.ugv_edf.distance(start_g) <= cfg.ugv_clearance:
        raise InfeasibleStart("UGV start is inside the obstacle clearance")
    length = pl.tether_length(start_g, start_a)
    if length is None:
        raise InfeasibleStart("no collision-free tether at the start configuration")
    if start_len is not None and start_len >= length:
        length = float(start_len)
    if not pl.uav_free(goal):
        raise ValueError("goal UAV position is not in free space")

    tree = Tree()
    tree.add(start_g, start_a, cfg.root_yaw, length, 0.0, -1)
    if np.linalg.norm(start_a - goal) <= cfg.goal_tolerance:
        return PlannedPath([PathState(start_g.copy(), start_a.copy(), length)], 0.0, 0, time.perf_counter() - t0, 1, [0.0])

    rng = np.random.default_rng(cfg.rng_seed)
    goal_nodes: List[int] = []
    history: List[float] = []
    it = 0
    while it < cfg.max_iters:
        it += 1
        rand_g, rand_a = pl.sample_state(rng)
        if rng.random() < cfg.goal_bias:
            rand_a = goal.copy()
        near = pl.nearest(tree, rand_g, rand_a)
        out = pl.steering(tree, near, rand_g, rand_a)
        if out is not None:
            p_g, p_a, length, _mode = out
            nbrs = pl.neighbors(tree, p_g, p_a)
            parent = near
            best = tree.cost[near] + edge_cost(tree.p_g[near], tree.p_a[near], p_g, p_a, cfg)
            if nbrs.size:
                costs = tree.cost[nbrs] + pl.edge_costs(tree, nbrs, p_g, p_a)
                for k in np.argsort(costs, kind="stable"):
                    j = int(nbrs[k])
                    if costs[k] >= best:
                        break
                    if pl.obstacle_free(tree.p_g[j], tree.p_a[j], p_g, p_a):
                        parent, best = j, float(costs[k])
                        break
            yaw = heading_yaw(tree.p_g[parent], p_g, tree.yaw[parent])
            new = tree.add(p_g, p_a, yaw, length, best, parent)
            pl.rewire(tree, new, nbrs)
            if np.linalg.norm(p_a - goal) <= cfg.goal_tolerance:
                goal_nodes.append(new)
        if it % cfg.batch_size == 0:
            if goal_nodes:
                history.append(float(min(tree.cost[goal_nodes])))
                break
            history.append(math.inf)
    if not goal_nodes:
        raise NoSolution(f"goal not reached in {cfg.max_iters} iterations")
    best_goal = min(goal_nodes, key=lambda j: (tree.cost[j], j))
    ids = tree.path_to(best_goal)
    states = [PathState(tree.p_g[i].copy(), tree.p_a[i].copy(), float(tree.length[i])) for i in ids]
    return PlannedPath(states, float(tree.cost[best_goal]), it, time.perf_counter() - t0, tree.n, history, tree)


def validate_tree(tree: Tree, planner: Planner, tol: float = 1e-9) -> List[str]:
    """Re-check node invariants; returns human-readable violations."""
    cfg = planner.cfg
    problems = []
    for i in range(tree.n):
        p = int(tree.parent[i])
        dist = float(np.linalg.norm(tree.p_a[i] - planner.attach(tree.p_g[i])))
        if tree.length[i] < dist - 1e-6:
            problems.append(f"node {i}: tether shorter than endpoint distance")
        if planner.tether_length(tree.p_g[i], tree.p_a[i]) is None:
            problems.append(f"node {i}: no collision-free tether")
        if p < 0:
            if i != 0:
                problems.append(f"node {i}: orphan")
            continue
        expect = tree.cost[p] + edge_cost(tree.p_g[p], tree.p_a[p], tree.p_g[i], tree.p_a[i], cfg)
        if abs(expect - tree.cost[i]) > tol * max(1.0, expect):
            problems.append(f"node {i}: cost {tree.cost[i]} != {expect}")
        seen = set()
        j = i
        while j >= 0:
            if j in seen:
                problems.append(f"node {i}: cycle")
                break
            seen.add(j)
            j = int(tree.parent[j])
    return problems
