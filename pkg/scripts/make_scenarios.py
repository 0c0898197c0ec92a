"""Regenerate the bundled synthetic scenarios in ``scenarios/``.

The three worlds are geometric stand-ins sized so that a laptop can run the
full plan/optimize pipeline in seconds. They are reconstructions of the
scenario types (straight corridor, open space with an arch, corridor ending
in a vertical duct), not copies of any published map.
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from marsupial.environment import PointCloud, save_point_cloud
from marsupial.synthetic import dedupe, plane_x, plane_y, plane_z

SPACING = 0.1


def corridor():
    L, W, H = 20.0, 4.0, 4.0
    pts = np.vstack([
        plane_z(0, L, 0, W, 0.0, SPACING),
        plane_z(0, L, 0, W, H, SPACING),
        plane_y(0, L, 0, H, 0.0, SPACING),
        plane_y(0, L, 0, H, W, SPACING),
        plane_x(0, W, 0, H, 0.0, SPACING),
        plane_x(0, W, 0, H, L, SPACING),
    ])
    meta = dict(
        bounds_min=(-0.5, -0.5, -0.5),
        bounds_max=(L + 0.5, W + 0.5, H + 0.5),
        start_ugv=(2.0, 2.0, 0.0),
        start_uav=(2.5, 2.0, 2.0),
        goal_uav=(18.0, 2.0, 2.0),
        l_max=5.0,
    )
    return pts, meta


def arch():
    L, W = 16.0, 10.0
    floor = plane_z(0, L, 0, W, 0.0, SPACING)
    # semicircular arch with a 1 m thick ring, standing across the floor at x = 8;
    # the opening leaves a 1.6 m tall window once a 1.2 m clearance is taken off
    r_in, r_out, depth = 4.0, 5.0, 1.0
    xc, yc = 8.0, W / 2.0
    parts = []
    th = np.linspace(0.0, np.pi, int(np.pi * r_out / SPACING) + 1)
    for r in (r_in, r_out):
        for x in np.linspace(xc - depth / 2, xc + depth / 2, int(depth / SPACING) + 1):
            parts.append(np.column_stack([np.full_like(th, x), yc + r * np.cos(th), r * np.sin(th)]))
    for x in (xc - depth / 2, xc + depth / 2):
        for r in np.linspace(r_in, r_out, int((r_out - r_in) / SPACING) + 1):
            parts.append(np.column_stack([np.full_like(th, x), yc + r * np.cos(th), r * np.sin(th)]))
    arch_pts = np.vstack(parts)
    pts = np.vstack([floor, arch_pts])
    meta = dict(
        bounds_min=(-0.5, -0.5, -0.5),
        bounds_max=(L + 0.5, W + 0.5, 6.0),
        start_ugv=(2.0, 5.0, 0.0),
        start_uav=(2.5, 5.0, 2.0),
        goal_uav=(14.0, 5.0, 2.0),
        l_max=2.0,
    )
    return pts, meta


def chimney():
    L, W, H, top = 12.0, 4.0, 4.0, 9.0
    hole = (8.4, L)
    ceiling = plane_z(0, hole[0], 0, W, H, SPACING)
    pts = np.vstack([
        plane_z(0, L, 0, W, 0.0, SPACING),
        ceiling,
        plane_y(0, L, 0, H, 0.0, SPACING),
        plane_y(0, L, 0, H, W, SPACING),
        plane_x(0, W, 0, H, 0.0, SPACING),
        plane_x(0, W, 0, top, L, SPACING),
        # duct walls above the opening
        plane_y(hole[0], L, H, top, 0.0, SPACING),
        plane_y(hole[0], L, H, top, W, SPACING),
        plane_x(0, W, H, top, hole[0], SPACING),
    ])
    meta = dict(
        bounds_min=(-0.5, -0.5, -0.5),
        bounds_max=(L + 0.5, W + 0.5, top + 0.5),
        start_ugv=(2.0, 2.0, 0.0),
        start_uav=(2.5, 2.0, 2.0),
        goal_uav=(10.2, 2.0, 6.5),
        l_max=7.0,
    )
    return pts, meta


WORLDS = {"corridor": corridor, "arch": arch, "chimney": chimney}


def _fmt(v):
    if isinstance(v, tuple):
        return ", ".join(f"{x:g}" for x in v)
    return f"{v:g}"


def write(name: str, out_dir: Path) -> None:
    pts, meta = WORLDS[name]()
    pts = dedupe(pts)
    cloud_file = f"{name}.xyz"
    save_point_cloud(PointCloud(pts), out_dir / cloud_file, header=f"synthetic {name} world, {len(pts)} points")
    lines = [f"name = {name}", f"cloud = {cloud_file}"] + [f"{k} = {_fmt(v)}" for k, v in meta.items()]
    (out_dir / f"{name}.scenario").write_text("\n".join(lines) + "\n")
    print(f"{name}: {len(pts)} points")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "scenarios")
    ap.add_argument("names", nargs="*", default=list(WORLDS))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        write(name, args.out)


if __name__ == "__main__":
    main()
