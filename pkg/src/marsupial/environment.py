"""Point-cloud environment: distance fields and UGV traversability."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyCloud, GridTooLarge, NoTraversableSeed, ParseError

MAX_VOXELS = 30_000_000


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).reshape(3))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).reshape(3))
        if np.any(self.hi <= self.lo):
            raise ValueError(f"degenerate box {self.lo} .. {self.hi}")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))

    @property
    def size(self) -> np.ndarray:
        return self.hi - self.lo


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    frame: str = "world"

    def __len__(self) -> int:
        return len(self.points)


def load_point_cloud(path) -> PointCloud:
    """Read an ``x y z`` text cloud; ``#`` lines and blank lines are skipped."""
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields, got {len(parts)}", lineno, str(path))
            try:
                xyz = [float(v) for v in parts]
            except ValueError:
                raise ParseError(f"not a number in {text!r}", lineno, str(path)) from None
            if not all(math.isfinite(v) for v in xyz):
                raise ParseError(f"non-finite coordinate in {text!r}", lineno, str(path))
            rows.append(xyz)
    if not rows:
        raise EmptyCloud(f"{path} contains no points")
    return PointCloud(np.array(rows, dtype=float))


def save_point_cloud(cloud: PointCloud, path, header: str = "") -> None:
    with open(path, "w") as fh:
        for line in header.splitlines():
            fh.write(f"# {line}\n")
        for x, y, z in cloud.points:
            fh.write(f"{x:.4f} {y:.4f} {z:.4f}\n")


class DistanceQuery(NamedTuple):
    distance: float
    clamped: bool


@dataclass(frozen=True)
class EdfGrid:
    """Dense Euclidean distance field sampled at voxel centres."""

    origin: np.ndarray
    resolution: float
    dims: tuple
    distances: np.ndarray = field(repr=False)

    def centre(self, idx) -> np.ndarray:
        return self.origin + (np.asarray(idx, dtype=float) + 0.5) * self.resolution

    @property
    def upper(self) -> np.ndarray:
        return self.origin + np.asarray(self.dims) * self.resolution

    def distance(self, points, return_clamped: bool = False):
        """Trilinear interpolation of the field at ``points`` (..., 3)."""
        pts = np.asarray(points, dtype=float)
        shape = pts.shape[:-1]
        pts = pts.reshape(-1, 3)
        dims = np.asarray(self.dims)
        f = (pts - self.origin) / self.resolution - 0.5
        fc = np.clip(f, 0.0, dims - 1)
        clamped = np.any((pts < self.origin) | (pts > self.upper), axis=1)
        i0 = np.minimum(np.floor(fc).astype(np.intp), np.maximum(dims - 2, 0))
        t = fc - i0
        i1 = np.minimum(i0 + 1, dims - 1)
        D = self.distances
        tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
        x0, y0, z0 = i0[:, 0], i0[:, 1], i0[:, 2]
        x1, y1, z1 = i1[:, 0], i1[:, 1], i1[:, 2]
        c00 = D[x0, y0, z0] * (1 - tx) + D[x1, y0, z0] * tx
        c10 = D[x0, y1, z0] * (1 - tx) + D[x1, y1, z0] * tx
        c01 = D[x0, y0, z1] * (1 - tx) + D[x1, y0, z1] * tx
        c11 = D[x0, y1, z1] * (1 - tx) + D[x1, y1, z1] * tx
        c0 = c00 * (1 - ty) + c10 * ty
        c1 = c01 * (1 - ty) + c11 * ty
        out = (c0 * (1 - tz) + c1 * tz).reshape(shape)
        if return_clamped:
            return out, clamped.reshape(shape)
        return out


def build_edf(cloud: PointCloud, bounds: Box, resolution: float = 0.1, max_voxels: int = MAX_VOXELS) -> EdfGrid:
    """Exact distance from every voxel centre to the nearest cloud point.

    An empty cloud yields a field filled with the grid diagonal.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    dims = tuple(int(max(1, math.ceil(s / resolution - 1e-9))) for s in bounds.size)
    total = dims[0] * dims[1] * dims[2]
    if total > max_voxels:
        raise GridTooLarge(f"grid {dims} has {total} voxels, cap is {max_voxels}")
    origin = bounds.lo.copy()
    if len(cloud) == 0:
        diag = float(np.linalg.norm(np.asarray(dims) * resolution))
        return EdfGrid(origin, float(resolution), dims, np.full(dims, diag))

    tree = cKDTree(cloud.points)
    axes = [origin[k] + (np.arange(dims[k]) + 0.5) * resolution for k in range(3)]
    out = np.empty(dims)
    # one x-slab at a time keeps memory flat on large grids
    yy, zz = np.meshgrid(axes[1], axes[2], indexing="ij")
    slab = np.empty((dims[1] * dims[2], 3))
    slab[:, 1] = yy.ravel()
    slab[:, 2] = zz.ravel()
    for i, x in enumerate(axes[0]):
        slab[:, 0] = x
        d, _ = tree.query(slab)
        out[i] = d.reshape(dims[1], dims[2])
    out.setflags(write=False)
    return EdfGrid(origin, float(resolution), dims, out)


def query_distance(grid: EdfGrid, p) -> DistanceQuery:
    d, clamped = grid.distance(np.asarray(p, dtype=float).reshape(1, 3), return_clamped=True)
    return DistanceQuery(float(d[0]), bool(clamped[0]))


@dataclass(frozen=True)
class TraversabilityParams:
    normal_max_slope: float = math.radians(30.0)
    step_max: float = 0.2
    adjacency_radius: float = 0.3
    k_normals: int = 12
    ugv_height: float = 1.0
    footprint_radius: float = 0.3


@dataclass(frozen=True)
class TraversableSet:
    points: np.ndarray
    indices: np.ndarray  # rows of the source cloud
    tree: cKDTree = field(repr=False, compare=False)
    normals: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    # in-plane radius one sample stands for (half the diagonal of a grid cell)
    cell_radius: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, points):
        """Vectorised nearest traversable point: (distances, points)."""
        d, idx = self.tree.query(np.asarray(points, dtype=float))
        return d, self.points[idx]

    def surface_distance(self, points) -> np.ndarray:
        """Distance to the surface the samples describe rather than to the samples.

        The offset to the nearest sample is split along its normal and in
        plane; the in-plane part only counts beyond ``cell_radius``. Inside
        the drivable area this is the height above the surface, without the
        sample-spacing ripple of the plain nearest-point distance.
        """
        pts = np.asarray(points, dtype=float)
        d, idx = self.tree.query(pts)
        if self.normals is None:
            return d
        n = self.normals[idx]
        v = pts - self.points[idx]
        dn = np.sum(v * n, axis=-1)
        t = np.linalg.norm(v - dn[..., None] * n, axis=-1)
        return np.hypot(dn, np.maximum(t - self.cell_radius, 0.0))


def make_traversable_set(points, indices=None, normals=None) -> TraversableSet:
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if indices is None:
        indices = np.arange(len(points))
    tree = cKDTree(points)
    radius = 0.0
    if normals is not None and len(points) > 1:
        d, _ = tree.query(points, k=2)
        radius = float(np.median(d[:, 1])) * math.sqrt(0.5)
    return TraversableSet(points, np.asarray(indices), tree, normals, radius)


def estimate_normals(points: np.ndarray, k: int = 12) -> np.ndarray:
    """Unit normals from a plane fit over the k nearest neighbours."""
    k = min(k, len(points))
    _, nbr = cKDTree(points).query(points, k=k)
    nbr = nbr.reshape(len(points), k)
    local = points[nbr]
    local = local - local.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", local, local)
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, :, 0]


def _overhead_blocked(points: np.ndarray, params: TraversabilityParams) -> np.ndarray:
    tree2d = cKDTree(points[:, :2])
    nbrs = tree2d.query_ball_point(points[:, :2], r=params.footprint_radius, return_sorted=False)
    counts = np.fromiter((len(n) for n in nbrs), dtype=np.intp, count=len(points))
    flat = np.concatenate([np.asarray(n, dtype=np.intp) for n in nbrs]) if counts.sum() else np.empty(0, np.intp)
    owner = np.repeat(np.arange(len(points)), counts)
    dz = points[flat, 2] - points[owner, 2]
    hit = (dz > params.step_max) & (dz <= params.ugv_height)
    blocked = np.zeros(len(points), dtype=bool)
    blocked[owner[hit]] = True
    return blocked


def analyze_traversability(cloud: PointCloud, start_ugv, params: Optional[TraversabilityParams] = None) -> TraversableSet:
    """Flood-fill the drivable surface reachable from ``start_ugv``.

    A point is a candidate when its surface normal is within
    ``normal_max_slope`` of vertical and nothing in the cloud sits above it
    within the UGV footprint and height. Candidates are linked when closer
    than ``adjacency_radius`` with a height step of at most ``step_max``.
    """
    params = params or TraversabilityParams()
    pts = cloud.points
    start = np.asarray(start_ugv, dtype=float)
    normals = estimate_normals(pts, params.k_normals)
    flat = np.abs(normals[:, 2]) >= math.cos(params.normal_max_slope)
    cand = np.flatnonzero(flat & ~_overhead_blocked(pts, params))
    if cand.size == 0:
        raise NoTraversableSeed("no point passes the slope/clearance filters")
    cpts = pts[cand]
    ctree = cKDTree(cpts)
    seeds = ctree.query_ball_point(start, r=params.adjacency_radius)
    if not seeds:
        raise NoTraversableSeed(f"no traversable point within {params.adjacency_radius} m of {start}")

    pairs = ctree.query_pairs(params.adjacency_radius, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.abs(cpts[pairs[:, 0], 2] - cpts[pairs[:, 1], 2]) <= params.step_max]
    n = len(cand)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs) else ([], ([], [])), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    keep = np.isin(labels, np.unique(labels[seeds]))
    idx = cand[keep]
    return make_traversable_set(pts[idx], idx, normals[idx])


def distance_to_traversable(tset: TraversableSet, p):
    d, q = tset.nearest(np.asarray(p, dtype=float).reshape(1, 3))
    return float(d[0]), q[0]


@dataclass(frozen=True)
class Environment:
    """Everything the planner and optimizer query about the world.

    ``edf`` covers the full cloud (UAV and tether clearance); ``ugv_edf``
    covers the cloud minus the drivable surface, which is what the ground
    robot's body can hit. The KD-trees give exact distances for verdicts.
    """

    cloud: PointCloud
    bounds: Box
    edf: EdfGrid
    ugv_edf: EdfGrid
    tset: TraversableSet
    obstacle_points: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_uav_tree", cKDTree(self.cloud.points) if len(self.cloud) else None)
        ugv = self.obstacle_points
        object.__setattr__(self, "_ugv_tree", cKDTree(ugv) if len(ugv) else None)

    def exact_uav_distance(self, points) -> np.ndarray:
        return _tree_distance(self._uav_tree, points, self.edf)

    def exact_ugv_distance(self, points) -> np.ndarray:
        return _tree_distance(self._ugv_tree, points, self.ugv_edf)

    def screened_uav_distance(self, points, threshold: float) -> np.ndarray:
        return _screened_distance(self._uav_tree, points, self.edf, threshold)

    def screened_ugv_distance(self, points, threshold: float) -> np.ndarray:
        return _screened_distance(self._ugv_tree, points, self.ugv_edf, threshold)


def _tree_distance(tree, points, grid: EdfGrid) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if tree is None:
        return np.full(pts.shape[:-1], float(grid.distances.max()))
    d, _ = tree.query(pts.reshape(-1, 3))
    return d.reshape(pts.shape[:-1])


def _screened_distance(tree, points, grid: EdfGrid, threshold: float) -> np.ndarray:
    """Exact distances wherever they can matter, field values elsewhere.

    Inside the grid the interpolated field is within one voxel diagonal of
    the true distance (it blends exact corner values). Points whose field
    value rules out both ``d <= threshold`` and being the minimum keep that
    value; everything else, and every point outside the grid, is queried
    exactly. Comparisons against ``threshold`` and the minimum are therefore
    exact.
    """
    pts = np.asarray(points, dtype=float)
    flat = pts.reshape(-1, 3)
    if tree is None or len(flat) == 0:
        return _tree_distance(tree, pts, grid)
    approx, clamped = grid.distance(flat, return_clamped=True)
    slack = math.sqrt(3.0) * grid.resolution
    upper = np.where(clamped, np.inf, approx + slack)
    cutoff = max(threshold, float(upper.min()))
    need = clamped | (approx - slack <= cutoff)
    out = approx.copy()
    if need.any():
        out[need] = tree.query(flat[need])[0]
    return out.reshape(pts.shape[:-1])


def build_environment(
    cloud: PointCloud,
    bounds: Box,
    start_ugv,
    resolution: float = 0.1,
    trav_params: Optional[TraversabilityParams] = None,
    ugv_slab: float = 0.5,
) -> Environment:
    tset = analyze_traversability(cloud, start_ugv, trav_params)
    mask = np.ones(len(cloud), dtype=bool)
    mask[tset.indices] = False
    obstacles = cloud.points[mask]
    edf = build_edf(cloud, bounds, resolution)
    # the ground robot is only ever queried near the drivable surface
    z = tset.points[:, 2]
    lo = bounds.lo.copy()
    hi = bounds.hi.copy()
    lo[2] = max(lo[2], z.min() - ugv_slab)
    hi[2] = min(hi[2], z.max() + ugv_slab)
    ugv_edf = build_edf(PointCloud(obstacles), Box(lo, hi), resolution)
    return Environment(cloud, bounds, edf, ugv_edf, tset, obstacles)
