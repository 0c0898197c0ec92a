"""Catenary model of the non-taut tether between the UGV and the UAV.

The tether hangs in the vertical plane through its two attachment points.
Inside that plane, with ``x`` the horizontal coordinate measured from the
UGV attachment and ``z`` the height::

    z(x) = a * cosh((x - x0) / a) + c

The scale ``a`` is found by bisection on ``sqrt(L**2 - v**2) = 2 a sinh(d / 2a)``
where ``d``/``v`` are the horizontal/vertical separations and ``L`` the length.
Everything here is vectorised over a leading batch axis; the scalar entry
points are thin wrappers over the batch solver.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LengthTooShort, NoConvergence

TOL_BISECT = 1e-8
MAX_BISECT_ITERS = 100
EPS_TAUT = 1e-3
EPS_PLANAR = 1e-3
EPS_LEN = 1e-6
A_BRACKET = (1e-4, 1e4)


class Shape(enum.IntEnum):
    CATENARY = 0
    STRAIGHT = 1
    VERTICAL = 2


def as_point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite coordinates: {arr}")
    return arr


def default_sample_count(length: float) -> int:
    """Roughly one tether sample every 0.2 m, never fewer than 10."""
    return max(10, int(math.ceil(5.0 * length)))


@dataclass(frozen=True)
class CatenarySolution:
    parameter_a: float
    vertex_offset_h: float
    vertex_offset_v: float
    plane_origin: np.ndarray
    plane_direction: np.ndarray
    degenerate_flag: Shape
    length: float
    end: np.ndarray
    span: float

    @property
    def offset_c(self) -> float:
        return self.vertex_offset_v - self.parameter_a

    def point_at(self, x: float) -> np.ndarray:
        """Point on the curve at horizontal coordinate ``x`` (catenary only)."""
        a = self.parameter_a
        z = a * math.cosh((x - self.vertex_offset_h) / a) + self.offset_c
        h = self.plane_origin[:2] + x * self.plane_direction[:2]
        return np.array([h[0], h[1], z])


@dataclass(frozen=True)
class TetherShape:
    samples: np.ndarray
    length: float

    def polyline_length(self) -> float:
        return float(np.linalg.norm(np.diff(self.samples, axis=0), axis=1).sum())


@dataclass
class CatenaryBatch:
    """Solved catenaries for N endpoint pairs, stored column-wise."""

    attach: np.ndarray  # (N, 3)
    end: np.ndarray  # (N, 3)
    length: np.ndarray  # (N,)
    span: np.ndarray  # horizontal separation d
    direction: np.ndarray  # (N, 2) unit horizontal
    a: np.ndarray
    x0: np.ndarray
    c: np.ndarray
    kind: np.ndarray  # Shape codes
    converged: np.ndarray

    def __len__(self) -> int:
        return len(self.length)


def _scale_residual(a, d, s):
    u = d / (2.0 * a)
    with np.errstate(over="ignore", invalid="ignore"):
        val = 2.0 * a * np.sinh(u) - s
    return np.where(u > 700.0, np.inf, val)


def _bisect_scale(d: np.ndarray, s: np.ndarray, tol: float, max_iters: int):
    """Solve ``2 a sinh(d / 2a) = s`` for ``a`` (residual decreasing in ``a``)."""
    lo = np.full(d.shape, A_BRACKET[0])
    hi = np.full(d.shape, A_BRACKET[1])
    for _ in range(60):
        bad = _scale_residual(lo, d, s) <= 0.0
        if not bad.any():
            break
        lo = np.where(bad, lo * 1e-2, lo)
    for _ in range(60):
        bad = _scale_residual(hi, d, s) >= 0.0
        if not bad.any():
            break
        hi = np.where(bad, hi * 1e2, hi)

    mid = np.sqrt(lo * hi)
    done = np.zeros(d.shape, dtype=bool)
    for _ in range(max_iters):
        mid = np.where(done, mid, np.sqrt(lo * hi))
        f = _scale_residual(mid, d, s)
        # float exhaustion counts as converged: the bracket cannot shrink further
        done |= (np.abs(f) <= tol) | (hi - lo <= 4.0 * np.finfo(float).eps * mid)
        if done.all():
            break
        pos = f > 0.0
        lo = np.where(~done & pos, mid, lo)
        hi = np.where(~done & ~pos, mid, hi)
    return mid, done


def solve_batch(
    attach,
    end,
    length,
    tol: float = TOL_BISECT,
    max_iters: int = MAX_BISECT_ITERS,
    clamp_short: bool = False,
    taut_tol: float = EPS_TAUT,
) -> CatenaryBatch:
    """Solve N catenaries at once.

    With ``clamp_short`` lengths below the endpoint distance are raised to it
    instead of raising :class:`LengthTooShort`. Tethers with relative slack up
    to ``taut_tol`` are treated as straight; a tiny value keeps the sampled
    shape continuous in the length, at the cost of very large scales.
    """
    attach = np.atleast_2d(np.asarray(attach, dtype=float))
    end = np.atleast_2d(np.asarray(end, dtype=float))
    length = np.atleast_1d(np.asarray(length, dtype=float)).copy()
    n = max(len(attach), len(end), len(length))
    attach = np.broadcast_to(attach, (n, 3))
    end = np.broadcast_to(end, (n, 3))
    length = np.broadcast_to(length, (n,)).copy()

    delta = end - attach
    dist = np.linalg.norm(delta, axis=1)
    if np.any(dist <= 1e-12):
        raise ValueError("tether endpoints coincide")
    if clamp_short:
        length = np.maximum(length, dist)
    else:
        short = length < dist - EPS_LEN
        if short.any():
            i = int(np.argmax(short))
            raise LengthTooShort(f"length {length[i]:.6g} < endpoint distance {dist[i]:.6g}")
        length = np.maximum(length, dist)

    d = np.hypot(delta[:, 0], delta[:, 1])
    v = delta[:, 2]
    direction = np.zeros((n, 2))
    planar = d >= EPS_PLANAR
    direction[:, 0] = 1.0
    direction[planar] = delta[planar, :2] / d[planar, None]

    kind = np.full(n, int(Shape.CATENARY))
    kind[length <= dist * (1.0 + taut_tol)] = int(Shape.STRAIGHT)
    kind[~planar] = int(Shape.VERTICAL)

    a = np.full(n, np.inf)
    x0 = d / 2.0
    c = np.full(n, np.nan)
    converged = np.ones(n, dtype=bool)
    cat = kind == int(Shape.CATENARY)
    if cat.any():
        dc, vc, lc = d[cat], v[cat], length[cat]
        s = np.sqrt(lc * lc - vc * vc)
        ac, ok = _bisect_scale(dc, s, tol, max_iters)
        x0c = dc / 2.0 - ac * np.arctanh(vc / lc)
        a[cat] = ac
        x0[cat] = x0c
        c[cat] = attach[cat, 2] - ac * np.cosh(x0c / ac)
        converged[cat] = ok
    return CatenaryBatch(attach.copy(), end.copy(), length, d, direction, a, x0, c, kind, converged)


def sample_batch(batch: CatenaryBatch, m: int) -> np.ndarray:
    """Sample every catenary of the batch into ``m`` points, uniform in arc length."""
    if m < 2:
        raise ValueError("need at least two tether samples")
    n = len(batch)
    t = np.linspace(0.0, 1.0, m)
    out = batch.attach[:, None, :] + t[None, :, None] * (batch.end - batch.attach)[:, None, :]
    cat = batch.kind == int(Shape.CATENARY)
    if cat.any():
        a = batch.a[cat, None]
        x0 = batch.x0[cat, None]
        s = t[None, :] * batch.length[cat, None]
        x = x0 + a * np.arcsinh(s / a + np.sinh(-x0 / a))
        z = a * np.cosh((x - x0) / a) + batch.c[cat, None]
        origin = batch.attach[cat]
        dirs = batch.direction[cat]
        pts = np.empty((int(cat.sum()), m, 3))
        pts[:, :, 0] = origin[:, None, 0] + x * dirs[:, None, 0]
        pts[:, :, 1] = origin[:, None, 1] + x * dirs[:, None, 1]
        pts[:, :, 2] = z
        out[cat] = pts
    assert out.shape == (n, m, 3)
    return out


def solve_catenary(attach_ugv, p_uav, length: float) -> CatenarySolution:
    attach_ugv = as_point(attach_ugv)
    p_uav = as_point(p_uav)
    b = solve_batch(attach_ugv, p_uav, [length])
    if not b.converged[0]:
        raise NoConvergence(f"bisection did not converge in {MAX_BISECT_ITERS} iterations")
    kind = Shape(int(b.kind[0]))
    direction = np.array([b.direction[0, 0], b.direction[0, 1], 0.0])
    if kind is Shape.CATENARY:
        vertex_v = float(b.a[0] + b.c[0])
    else:
        vertex_v = float(min(attach_ugv[2], p_uav[2]))
    return CatenarySolution(
        parameter_a=float(b.a[0]),
        vertex_offset_h=float(b.x0[0]),
        vertex_offset_v=vertex_v,
        plane_origin=attach_ugv,
        plane_direction=direction,
        degenerate_flag=kind,
        length=float(b.length[0]),
        end=p_uav,
        span=float(b.span[0]),
    )


def sample_tether(sol: CatenarySolution, m: int) -> TetherShape:
    b = CatenaryBatch(
        attach=sol.plane_origin[None, :],
        end=sol.end[None, :],
        length=np.array([sol.length]),
        span=np.array([sol.span]),
        direction=sol.plane_direction[None, :2],
        a=np.array([sol.parameter_a]),
        x0=np.array([sol.vertex_offset_h]),
        c=np.array([sol.offset_c]),
        kind=np.array([int(sol.degenerate_flag)]),
        converged=np.array([True]),
    )
    return TetherShape(samples=sample_batch(b, m)[0], length=sol.length)


def candidate_lengths(dist: float, l_max: float, delta_l: float) -> np.ndarray:
    if delta_l <= 0:
        raise ValueError("delta_l must be positive")
    if l_max < dist - EPS_LEN:
        return np.empty(0)
    k = int(math.floor((l_max - dist) / delta_l + 1e-9))
    return dist + delta_l * np.arange(k + 1)


def check_catenary(
    attach_ugv,
    p_uav,
    env,
    l_max: float,
    delta_l: float = 0.1,
    m: Optional[int] = None,
    clearance: float = 0.1,
) -> Optional[float]:
    """Shortest collision-free tether length on the grid ``dist + k * delta_l``.

    ``env`` is anything with a vectorised ``distance(points)`` method. Returns
    None when every candidate up to ``l_max`` touches an obstacle.
    """
    attach_ugv = np.asarray(attach_ugv, dtype=float)
    p_uav = np.asarray(p_uav, dtype=float)
    dist = float(np.linalg.norm(p_uav - attach_ugv))
    lengths = candidate_lengths(dist, l_max, delta_l)
    if lengths.size == 0:
        return None
    if m is None:
        m = default_sample_count(l_max)

    # straight chord first: by far the most common success
    t = np.linspace(0.0, 1.0, m)[:, None]
    chord = attach_ugv + t * (p_uav - attach_ugv)
    if np.all(env.distance(chord) > clearance):
        return float(lengths[0])
    if lengths.size == 1:
        return None

    rest = lengths[1:]
    batch = solve_batch(attach_ugv, p_uav, rest)
    if not batch.converged.all():
        raise NoConvergence("bisection did not converge while scanning tether lengths")
    pts = sample_batch(batch, m)
    clear = (env.distance(pts.reshape(-1, 3)).reshape(len(rest), m) > clearance).all(axis=1)
    if not clear.any():
        return None
    return float(rest[int(np.argmax(clear))])
