"""Time-parameterised trajectory refinement by sparse damped least squares.

Decision vector: for each of the n timesteps ``[p_g (3), p_a (3), l, dt]``.
State 0 and state n-1 positions are pinned, ``dt[0]`` is fixed at zero and
every other ``dt`` is bounded below by ``dt_min``.

The objective is ``sum_k gamma_k * cauchy(delta_k^2)`` over thirteen residual
families. It is minimised with Levenberg-Marquardt on the iteratively
reweighted system (row weights ``gamma * cauchy'(delta^2)``); a step is kept
only if the true robust cost drops and, with ``keep_feasible``, only if it
does not turn a collision-free trajectory into one that collides.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from . import residuals as R
from .config import OptimizerConfig, PlannerConfig
from .environment import Environment
from .errors import CatenaryLost, DivergedNumerically
from .tether import default_sample_count, sample_batch, solve_batch

log = logging.getLogger(__name__)

FAMILIES = ("eg", "ea", "og", "oa", "ot", "trav", "sg", "sa", "vg", "va", "ag", "aa", "u")
NV = 8
PG, PA, LEN, DT = 0, 3, 6, 7
UP = np.array([0.0, 0.0, 1.0])
CATENARY_TOL = 1e-12
# slack below which the optimizer treats the tether as straight; small enough
# that the sag jump at the switch is far below the finite-difference step
TAUT_TOL = 1e-10
DAMPING_FLOOR = 1.0
MIN_DAMPING, MAX_DAMPING = 1e-12, 1e16


@dataclass(frozen=True)
class TrajectoryState:
    p_g: np.ndarray
    p_a: np.ndarray
    l: float
    dt: float


@dataclass
class Trajectory:
    p_g: np.ndarray
    p_a: np.ndarray
    l: np.ndarray
    dt: np.ndarray

    def __len__(self) -> int:
        return len(self.l)

    @property
    def times(self) -> np.ndarray:
        return np.cumsum(self.dt)

    def states(self) -> List[TrajectoryState]:
        return [TrajectoryState(self.p_g[i].copy(), self.p_a[i].copy(), float(self.l[i]), float(self.dt[i]))
                for i in range(len(self))]

    def copy(self) -> "Trajectory":
        return Trajectory(self.p_g.copy(), self.p_a.copy(), self.l.copy(), self.dt.copy())

    def to_vector(self) -> np.ndarray:
        return np.column_stack([self.p_g, self.p_a, self.l, self.dt]).ravel()

    @classmethod
    def from_vector(cls, x) -> "Trajectory":
        X = np.asarray(x, dtype=float).reshape(-1, NV)
        return cls(X[:, 0:3].copy(), X[:, 3:6].copy(), X[:, 6].copy(), X[:, 7].copy())

    @classmethod
    def from_states(cls, states) -> "Trajectory":
        return cls(
            np.array([s.p_g for s in states], dtype=float),
            np.array([s.p_a for s in states], dtype=float),
            np.array([s.l for s in states], dtype=float),
            np.array([s.dt for s in states], dtype=float),
        )


def polyline_length(P) -> float:
    return float(np.linalg.norm(np.diff(P, axis=0), axis=1).sum())


# --- initial trajectory ----------------------------------------------------

def spread_groups(P: np.ndarray, tol: float = 1e-3) -> List[tuple]:
    """Runs ``(start, stop)`` of near-identical points followed by a distinct one.

    ``stop`` is the index of the next distinct point.
    """
    groups = []
    n = len(P)
    i = 0
    while i < n - 1:
        j = i
        while j + 1 < n and np.linalg.norm(P[j + 1] - P[i]) < tol:
            j += 1
        if j > i and j + 1 < n:
            groups.append((i, j + 1))
        i = j + 1
    return groups


def prepare_initial_trajectory(path, v_g: float, v_a: float, env: Environment, planner_cfg: PlannerConfig,
                               dt_min: float = 0.01) -> Trajectory:
    """Attach timing to a planned path.

    Stacked waypoints of either robot (the planner often moves one robot
    while the other waits) are spread evenly toward the next distinct one,
    the tether length of every state is recomputed as the shortest
    collision-free length, and ``dt`` is the slower of the two robots over
    each segment.
    """
    from .planner import Planner

    if v_g <= 0 or v_a <= 0:
        raise ValueError("speeds must be positive")
    pl = Planner(env, planner_cfg)
    P = np.array([s.p_g for s in path.states], dtype=float)
    A = np.array([s.p_a for s in path.states], dtype=float)
    n = len(P)
    for moving, free in ((P, pl.ugv_free), (A, pl.uav_free)):
        for start, stop in spread_groups(moving):
            old = moving[start:stop].copy()
            t = (np.arange(start, stop) - start) / (stop - start)
            moving[start:stop] = moving[start] + t[:, None] * (moving[stop] - moving[start])
            ok = all(
                free(moving[k]) and pl.tether_length(P[k], A[k]) is not None
                for k in range(start + 1, stop)
            )
            if not ok:
                log.debug("keeping stacked waypoints %d..%d: spreading them is infeasible", start, stop)
                moving[start:stop] = old

    L = np.empty(n)
    for k in range(n):
        length = pl.tether_length(P[k], A[k])
        if length is None:
            raise CatenaryLost(f"state {k} has no collision-free tether")
        L[k] = length
    dt = np.zeros(n)
    if n > 1:
        dg = np.linalg.norm(np.diff(P, axis=0), axis=1) / v_g
        da = np.linalg.norm(np.diff(A, axis=0), axis=1) / v_a
        dt[1:] = np.maximum(np.maximum(dg, da), dt_min)
    return Trajectory(P, A, L, dt)


# --- problem ---------------------------------------------------------------

def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 1e-12, v / np.where(n > 1e-12, n, 1.0), 0.0), n[..., 0]


def _fd_slopes(func, base: np.ndarray, h: float) -> np.ndarray:
    """Central-difference slopes of a vectorised ``func`` over the last axis of ``base``."""
    N, V = base.shape
    probes = np.repeat(base[:, None, :], 2 * V, axis=1)
    k = np.arange(V)
    probes[:, 2 * k, k] += h
    probes[:, 2 * k + 1, k] -= h
    vals = func(probes.reshape(N * 2 * V, V)).reshape(N, V, 2)
    return (vals[:, :, 0] - vals[:, :, 1]) / (2.0 * h)


@dataclass
class Block:
    r: np.ndarray
    rows: Optional[np.ndarray] = None
    cols: Optional[np.ndarray] = None
    vals: Optional[np.ndarray] = None


class TrajectoryProblem:
    """Residuals and Jacobians of the trajectory cost for one world.

    The solver works on the decision vector with one substitution: the tether
    slot holds the slack ``l - d_u`` instead of ``l``. The cost is the same
    function, but a taut tether stays taut while the robots move, so steps no
    longer fall off the ridge where the tether shape has a square-root cusp.
    Use :meth:`to_solver` and :meth:`to_physical` to convert.
    """

    def __init__(self, env: Environment, initial: Trajectory, cfg: OptimizerConfig):
        self.env = env
        self.cfg = cfg
        self.n = len(initial)
        th = cfg.thresholds
        steps = max(self.n - 1, 1)
        self.rho_eg = th.eg if th.eg is not None else polyline_length(initial.p_g) / steps
        self.rho_ea = th.ea if th.ea is not None else polyline_length(initial.p_a) / steps
        self.m = cfg.tether_samples or default_sample_count(float(np.max(initial.l)))
        self.gamma = {k: getattr(cfg.weights, k) for k in FAMILIES}

        free = np.ones((self.n, NV), dtype=bool)
        free[0, :6] = False
        free[-1, :6] = False
        free[0, DT] = False
        if not cfg.ugv_height_free:
            free[:, PG + 2] = False
        self.free = np.flatnonzero(free.ravel())
        lb = np.full((self.n, NV), -np.inf)
        lb[1:, DT] = cfg.dt_min
        self.lower = lb.ravel()

    def chord(self, X) -> np.ndarray:
        """Attachment-to-UAV distance for rows ``[p_g, p_a, ...]``."""
        return np.linalg.norm(X[..., 3:6] - (X[..., 0:3] + self.cfg.attach_z * UP), axis=-1)

    def to_solver(self, x) -> np.ndarray:
        X = np.asarray(x, dtype=float).reshape(self.n, NV).copy()
        X[:, LEN] -= self.chord(X)
        return X.ravel()

    def to_physical(self, y) -> np.ndarray:
        X = np.asarray(y, dtype=float).reshape(self.n, NV).copy()
        X[:, LEN] += self.chord(X)
        return X.ravel()

    # columns of variable ``k`` for states ``idx``
    @staticmethod
    def _cols(idx, k):
        return NV * np.asarray(idx)[:, None] + k + np.arange(3)[None, :] if k in (PG, PA) else NV * np.asarray(idx) + k

    # -- individual families --
    def _equidistance(self, P, off, rho, jac):
        u, nrm = _unit(P[1:] - P[:-1])
        b = Block(nrm - rho)
        if jac:
            i = np.arange(self.n - 1)
            rows = np.repeat(i, 6)
            cols = np.hstack([NV * i[:, None] + off + np.arange(3), NV * (i[:, None] + 1) + off + np.arange(3)])
            vals = np.hstack([-u, u])
            b.rows, b.cols, b.vals = rows, cols.ravel(), vals.ravel()
        return b

    def _velocity(self, P, dt, off, rho, jac):
        u, nrm = _unit(P[1:] - P[:-1])
        d = dt[1:]
        b = Block(nrm / d - rho)
        if jac:
            i = np.arange(self.n - 1)
            rows = np.repeat(i, 7)
            cols = np.hstack([
                NV * i[:, None] + off + np.arange(3),
                NV * (i[:, None] + 1) + off + np.arange(3),
                (NV * (i + 1) + DT)[:, None],
            ])
            vals = np.hstack([-u / d[:, None], u / d[:, None], (-nrm / d ** 2)[:, None]])
            b.rows, b.cols, b.vals = rows, cols.ravel(), vals.ravel()
        return b

    def _acceleration(self, P, dt, off, jac):
        if self.n < 3:
            return Block(np.empty(0), np.empty(0, int), np.empty(0, int), np.empty(0))
        u, nrm = _unit(P[1:] - P[:-1])
        v = nrm / dt[1:]
        T = dt[1:-1] + dt[2:]
        acc = (v[1:] - v[:-1]) / T
        b = Block(acc)
        if jac:
            i = np.arange(1, self.n - 1)
            u_prev, u_next = u[:-1], u[1:]
            d_i, d_n = dt[1:-1], dt[2:]
            n_prev, n_next = nrm[:-1], nrm[1:]
            Tc = T[:, None]
            rows = np.repeat(np.arange(len(i)), 11)
            cols = np.hstack([
                NV * (i[:, None] - 1) + off + np.arange(3),
                NV * i[:, None] + off + np.arange(3),
                NV * (i[:, None] + 1) + off + np.arange(3),
                (NV * i + DT)[:, None],
                (NV * (i + 1) + DT)[:, None],
            ])
            vals = np.hstack([
                (u_prev / d_i[:, None]) / Tc,
                (-u_next / d_n[:, None] - u_prev / d_i[:, None]) / Tc,
                (u_next / d_n[:, None]) / Tc,
                ((n_prev / d_i ** 2) / T - acc / T)[:, None],
                ((-n_next / d_n ** 2) / T - acc / T)[:, None],
            ])
            b.rows, b.cols, b.vals = rows, cols.ravel(), vals.ravel()
        return b

    def _tether_length(self, X, jac):
        slack = X[:, LEN]
        active = slack < 0.0
        e = np.exp(np.where(active, -slack, 0.0))
        b = Block(np.where(active, e - 1.0, 0.0))
        if jac:
            b.rows = np.arange(self.n)
            b.cols = NV * np.arange(self.n) + LEN
            b.vals = np.where(active, -e, 0.0)
        return b

    def _fd_block(self, func, base, cols, jac):
        b = Block(func(base))
        if jac:
            J = _fd_slopes(func, base, self.cfg.fd_step)
            N, V = J.shape
            b.rows = np.repeat(np.arange(N), V)
            b.cols = np.asarray(cols).reshape(N, V).ravel()
            b.vals = J.ravel()
        return b

    def obstacle_ugv(self, P):
        return R.hinge_below(self.env.ugv_edf.distance(P), self.cfg.thresholds.og + self.cfg.hinge_margin)

    def obstacle_uav(self, P):
        return R.hinge_below(self.env.edf.distance(P), self.cfg.thresholds.oa + self.cfg.hinge_margin)

    def traversability(self, P):
        return R.hinge_above(self.env.tset.surface_distance(P), self.cfg.thresholds.trav)

    def tether_samples(self, V):
        """Tether samples for rows ``[p_g, p_a, slack]``; negative slack is clamped."""
        attach = V[:, 0:3] + self.cfg.attach_z * UP
        length = self.chord(V) + np.maximum(V[:, 6], 0.0)
        batch = solve_batch(attach, V[:, 3:6], length, tol=CATENARY_TOL, clamp_short=True, taut_tol=TAUT_TOL)
        return sample_batch(batch, self.m)

    def tether_obstacle(self, V):
        pts = self.tether_samples(V)
        d = self.env.edf.distance(pts)
        th = self.cfg.thresholds
        return R.tether_obstacle_vec(d, th.ot, th.beta, self.cfg.min_tether_distance)

    def _smooth_func(self, rho):
        def f(V):
            return R.smoothness_vec(V[:, 0:3], V[:, 3:6], V[:, 6:9], rho)
        return f

    def evaluate(self, y, jac: bool = False) -> Dict[str, Block]:
        """Residual blocks at solver coordinates ``y``."""
        X = np.asarray(y, dtype=float).reshape(self.n, NV)
        Pg, Pa, dt = X[:, 0:3], X[:, 3:6], X[:, 7]
        th = self.cfg.thresholds
        n = self.n
        idx = np.arange(n)
        out = {}
        out["eg"] = self._equidistance(Pg, PG, self.rho_eg, jac)
        out["ea"] = self._equidistance(Pa, PA, self.rho_ea, jac)
        out["og"] = self._fd_block(self.obstacle_ugv, Pg, self._cols(idx, PG), jac)
        out["oa"] = self._fd_block(self.obstacle_uav, Pa, self._cols(idx, PA), jac)
        tv = X[:, 0:7]
        tcols = np.hstack([self._cols(idx, PG), self._cols(idx, PA), (NV * idx + LEN)[:, None]])
        out["ot"] = self._fd_block(self.tether_obstacle, tv, tcols, jac)
        out["trav"] = self._fd_block(self.traversability, Pg, self._cols(idx, PG), jac)
        if n >= 3:
            mid = np.arange(1, n - 1)
            for fam, P, off, rho in (("sg", Pg, PG, th.sg), ("sa", Pa, PA, th.sa)):
                V = np.hstack([P[:-2], P[1:-1], P[2:]])
                cols = np.hstack([self._cols(mid - 1, off), self._cols(mid, off), self._cols(mid + 1, off)])
                out[fam] = self._fd_block(self._smooth_func(rho), V, cols, jac)
        else:
            empty = Block(np.empty(0), np.empty(0, int), np.empty(0, int), np.empty(0))
            out["sg"] = out["sa"] = empty
        out["vg"] = self._velocity(Pg, dt, PG, th.vg, jac)
        out["va"] = self._velocity(Pa, dt, PA, th.va, jac)
        out["ag"] = self._acceleration(Pg, dt, PG, jac)
        out["aa"] = self._acceleration(Pa, dt, PA, jac)
        out["u"] = self._tether_length(X, jac)
        return out

    def family_costs(self, blocks: Dict[str, Block]) -> Dict[str, float]:
        s = self.cfg.cauchy_scale
        return {k: float(self.gamma[k] * np.sum(R.cauchy(b.r ** 2, s))) for k, b in blocks.items()}

    @staticmethod
    def violation_columns(violations) -> np.ndarray:
        """Variables behind clearance ``violations``.

        A robot violation between two states names that robot at both ends
        of the segment, a tether violation the whole state.
        """
        cols = [np.empty(0, dtype=int)]
        for v in violations:
            if v.agent == "tether":
                cols.append(NV * v.index + np.arange(LEN + 1))
                continue
            k = PG if v.agent == "ugv" else PA
            for i in {int(math.floor(v.owner)), int(math.ceil(v.owner))}:
                cols.append(NV * i + k + np.arange(3))
        return np.unique(np.concatenate(cols))

    def cost(self, y) -> float:
        return sum(self.family_costs(self.evaluate(y)).values())

    def plain_costs(self, blocks: Dict[str, Block]) -> Dict[str, float]:
        return {k: float(self.gamma[k] * np.sum(b.r ** 2)) for k, b in blocks.items()}

    def weighted_system(self, blocks: Dict[str, Block]):
        """Reweighted residual vector and Jacobian over the free variables."""
        s = self.cfg.cauchy_scale
        rs, rows, cols, vals = [], [], [], []
        offset = 0
        for k in FAMILIES:
            b = blocks[k]
            sw = np.sqrt(self.gamma[k] * R.cauchy_weight(b.r ** 2, s))
            rs.append(sw * b.r)
            rows.append(b.rows + offset)
            cols.append(b.cols)
            vals.append(b.vals * sw[b.rows])
            offset += len(b.r)
        J = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(offset, NV * self.n))
        return np.concatenate(rs), J[:, self.free]


@dataclass
class OptimizeResult:
    trajectory: Trajectory
    initial_cost: float
    final_cost: float
    iterations: int
    accepted: int
    reason: str
    cost_history: List[float] = field(default_factory=list)
    family_costs: Dict[str, float] = field(default_factory=dict)
    # trial steps that would have caused a collision
    blocked_steps: int = 0


def _check_finite(problem: TrajectoryProblem, blocks) -> float:
    costs = problem.family_costs(blocks)
    for k, v in costs.items():
        if not math.isfinite(v):
            raise DivergedNumerically(k)
    return sum(costs.values())


def optimize(initial: Trajectory, env: Environment, cfg: Optional[OptimizerConfig] = None,
             max_iters: Optional[int] = None) -> OptimizeResult:
    cfg = cfg or OptimizerConfig()
    max_iters = cfg.max_iters if max_iters is None else max_iters
    problem = TrajectoryProblem(env, initial, cfg)
    x = problem.to_solver(initial.to_vector())
    lower = problem.lower
    x = np.maximum(x, lower)
    blocks = problem.evaluate(x, jac=True)
    F = _check_finite(problem, blocks)
    F0 = F
    history = [F]
    lam = cfg.damping
    it = accepted = 0
    reason = "max_iters"
    guard = cfg.keep_feasible and check_feasibility(initial, env, cfg).feasible
    free = problem.free
    blocked_steps = 0
    while it < max_iters:
        r, J = problem.weighted_system(blocks)
        g = J.T @ r
        xf = x[free]
        at_bound = (xf <= lower[free] + 1e-12) & (g > 0)
        g_proj = np.where(at_bound, 0.0, g)
        if np.max(np.abs(g_proj), initial=0.0) < cfg.g_tol:
            reason = "gradient"
            break
        A = (J.T @ J).tocsc()
        raw = A.diagonal()
        # Marquardt scaling floored at the mean diagonal: weakly observed
        # coordinates would otherwise be left almost undamped and overshoot
        diag = np.maximum(raw, DAMPING_FLOOR * max(float(raw.mean()) if raw.size else 0.0, 1e-12))
        active = ~at_bound
        step_found = False
        while it < max_iters:
            it += 1
            M = A + sp.diags(lam * diag)
            Ma = M[active][:, active]
            dx = np.zeros_like(xf)
            with np.errstate(all="ignore"):
                dx[active] = spsolve(Ma.tocsc(), -g[active])
            if not np.all(np.isfinite(dx)):
                lam *= cfg.damping_factor
                continue
            x_new = x.copy()
            x_new[free] = np.maximum(xf + dx, lower[free])
            trial = problem.evaluate(x_new)
            F_new = sum(problem.family_costs(trial).values())
            if math.isfinite(F_new) and F_new < F:
                if guard:
                    report = check_feasibility(Trajectory.from_vector(problem.to_physical(x_new)), env, cfg)
                    if not report.feasible:
                        # hold the variables that would collide for this step
                        # and solve again for the rest
                        hit = np.isin(free, problem.violation_columns(report.violations)) & active
                        blocked_steps += 1
                        if hit.any():
                            active &= ~hit
                            continue
                        lam *= cfg.damping_factor
                        if lam > MAX_DAMPING:
                            break
                        continue
                step = x_new[free] - xf
                predicted = r @ r - np.sum((r + J @ step) ** 2)
                gain = (F - F_new) / predicted if predicted > 0 else 0.0
                step_found = True
                break
            lam *= cfg.damping_factor
            if lam > MAX_DAMPING:
                break
        if not step_found:
            reason = "no_descent" if lam > MAX_DAMPING else "max_iters"
            break
        accepted += 1
        rel = (F - F_new) / max(F, 1e-300)
        x = x_new
        F = F_new
        history.append(F)
        # relax the damping only when the linear model predicted the drop well
        if gain > 0.75:
            lam = max(lam / cfg.damping_factor, MIN_DAMPING)
        if rel < cfg.f_tol:
            reason = "cost"
            break
        blocks = problem.evaluate(x, jac=True)
    traj = Trajectory.from_vector(problem.to_physical(x))
    # pinned entries are restored verbatim so they stay bit-identical
    traj.p_g[0], traj.p_g[-1] = initial.p_g[0], initial.p_g[-1]
    traj.p_a[0], traj.p_a[-1] = initial.p_a[0], initial.p_a[-1]
    fam = problem.family_costs(problem.evaluate(x))
    if blocked_steps:
        log.debug("%d trial steps would have collided", blocked_steps)
    return OptimizeResult(traj, F0, F, it, accepted, reason, history, fam, blocked_steps)


# --- feasibility -----------------------------------------------------------

@dataclass
class Violation:
    agent: str
    index: int
    margin: float
    # position along the trajectory in state units (fractional between states)
    owner: float = 0.0


@dataclass
class FeasibilityReport:
    feasible: bool
    min_clearance: Dict[str, float]
    worst: Dict[str, Violation]
    violations: List[Violation] = field(default_factory=list)
    # states whose tether is shorter than the endpoint distance; reported
    # for diagnosis, they do not affect the clearance verdict
    short_tether: List[int] = field(default_factory=list)


def _dense(P: np.ndarray, step: float):
    """Points along the polyline ``P`` at most ``step`` apart, with their state index."""
    pts, owner = [P[:1]], [np.array([0.0])]
    for i in range(len(P) - 1):
        seg = np.linalg.norm(P[i + 1] - P[i])
        k = max(1, int(math.ceil(seg / step)))
        t = np.arange(1, k + 1) / k
        pts.append(P[i] + t[:, None] * (P[i + 1] - P[i]))
        owner.append(i + t)
    return np.vstack(pts), np.concatenate(owner)


def tether_polylines(traj: Trajectory, attach_z: float, m: Optional[int] = None) -> np.ndarray:
    """Tether samples of every state, shape ``(n, m, 3)``.

    A length shorter than the endpoint distance is drawn as the straight
    segment.
    """
    attach = traj.p_g + attach_z * UP
    du = np.linalg.norm(traj.p_a - attach, axis=1)
    m = m or default_sample_count(float(np.max(np.maximum(traj.l, du))))
    return sample_batch(solve_batch(attach, traj.p_a, traj.l, clamp_short=True), m)


def check_feasibility(traj: Trajectory, env: Environment, cfg: Optional[OptimizerConfig] = None,
                      interp_step: float = 0.05, m: Optional[int] = None) -> FeasibilityReport:
    """Clearance verdict with exact point-cloud distances.

    Robot positions are checked densely along every segment; the tether at
    every state, evaluated at ``max(l, d_u)`` when the length is too short.
    """
    cfg = cfg or OptimizerConfig()
    th = cfg.thresholds
    violations: List[Violation] = []
    mins: Dict[str, float] = {}
    worst: Dict[str, Violation] = {}

    for agent, P, dist_fn, rho in (
        ("ugv", traj.p_g, env.screened_ugv_distance, th.og),
        ("uav", traj.p_a, env.screened_uav_distance, th.oa),
    ):
        pts, owner = _dense(P, interp_step)
        d = dist_fn(pts, rho)
        k = int(np.argmin(d))
        mins[agent] = float(d[k])
        worst[agent] = Violation(agent, int(round(owner[k])), float(d[k] - rho), float(owner[k]))
        bad = d <= rho
        for j in np.flatnonzero(bad):
            violations.append(Violation(agent, int(round(owner[j])), float(d[j] - rho), float(owner[j])))

    samples = tether_polylines(traj, cfg.attach_z, m or cfg.tether_samples)
    d = env.screened_uav_distance(samples, th.ot)
    per_state = d.min(axis=1)
    k = int(np.argmin(per_state))
    mins["tether"] = float(per_state[k])
    worst["tether"] = Violation("tether", k, float(per_state[k] - th.ot), float(k))
    for i in np.flatnonzero(per_state <= th.ot):
        violations.append(Violation("tether", int(i), float(per_state[i] - th.ot), float(i)))
    du = np.linalg.norm(traj.p_a - (traj.p_g + cfg.attach_z * UP), axis=1)
    short = [int(i) for i in np.flatnonzero(traj.l < du - 1e-6)]
    return FeasibilityReport(not violations, mins, worst, violations, short)
