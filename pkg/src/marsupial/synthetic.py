"""Small geometric primitives for building synthetic point clouds."""
from __future__ import annotations

import numpy as np


def _grid(a0, a1, b0, b1, spacing):
    na = max(2, int(round((a1 - a0) / spacing)) + 1)
    nb = max(2, int(round((b1 - b0) / spacing)) + 1)
    a, b = np.meshgrid(np.linspace(a0, a1, na), np.linspace(b0, b1, nb), indexing="ij")
    return a.ravel(), b.ravel()


def plane_z(x0, x1, y0, y1, z, spacing=0.1):
    x, y = _grid(x0, x1, y0, y1, spacing)
    return np.column_stack([x, y, np.full_like(x, z)])


def plane_y(x0, x1, z0, z1, y, spacing=0.1):
    x, z = _grid(x0, x1, z0, z1, spacing)
    return np.column_stack([x, np.full_like(x, y), z])


def plane_x(y0, y1, z0, z1, x, spacing=0.1):
    y, z = _grid(y0, y1, z0, z1, spacing)
    return np.column_stack([np.full_like(y, x), y, z])


def box_surface(lo, hi, spacing=0.1):
    """Points on the six faces of an axis-aligned box."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    faces = [
        plane_z(x0, x1, y0, y1, z0, spacing),
        plane_z(x0, x1, y0, y1, z1, spacing),
        plane_y(x0, x1, z0, z1, y0, spacing),
        plane_y(x0, x1, z0, z1, y1, spacing),
        plane_x(y0, y1, z0, z1, x0, spacing),
        plane_x(y0, y1, z0, z1, x1, spacing),
    ]
    return np.vstack(faces)


def remove_box(points, lo, hi, inclusive=False):
    """Drop points strictly inside (or on, with ``inclusive``) a box."""
    lo = np.asarray(lo)
    hi = np.asarray(hi)
    if inclusive:
        inside = np.all((points >= lo) & (points <= hi), axis=1)
    else:
        inside = np.all((points > lo) & (points < hi), axis=1)
    return points[~inside]


def dedupe(points, decimals=6):
    _, idx = np.unique(np.round(points, decimals), axis=0, return_index=True)
    return points[np.sort(idx)]
