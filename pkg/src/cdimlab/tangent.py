"""Rescaled windows around a point and their eps-component counts.

A window at (center, lam) is the ball of radius lam*R with distances divided by lam. Windows
along a decreasing sequence of lam stand in for weak tangents; nothing here takes a limit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud
from .nets import proximity_components

RESOLUTION = 100  # rescaled spacing must be <= R / RESOLUTION
EPS_FIDELITY = 10  # eps must be >= EPS_FIDELITY x rescaled spacing


@dataclass(frozen=True, eq=False)
class Window:
    source: str
    center: tuple
    lam: float
    R: float
    points: np.ndarray
    spacing: float
    center_index: int | None = None

    def __len__(self):
        return len(self.points)

    def meta(self):
        return {
            "source": self.source,
            "center": list(self.center),
            "center_index": self.center_index,
            "lambda": self.lam,
            "R": self.R,
            "rescaled_spacing": self.spacing,
            "n_points": len(self.points),
        }

    def write(self, csv_path, meta_path):
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("x,y\n")
            for x, y in self.points.tolist():
                fh.write(f"{x:.17g},{y:.17g}\n")
        with open(meta_path, "w") as fh:
            fh.write(json.dumps(self.meta(), indent=2, sort_keys=True) + "\n")


def rescaled_window(cloud: PointCloud, center, lam: float, R: float, center_index=None) -> Window:
    """Points q with |q - center| / lam <= R, as (q - center) / lam, in cloud order."""
    if not lam > 0 or not R > 0:
        raise ValueError("lam and R must be positive")
    if lam * R > cloud.diameter():
        raise ValueError(f"window radius lam*R = {lam * R:g} exceeds the diameter {cloud.diameter():g}")
    spacing = cloud.spacing / lam
    if spacing > R / RESOLUTION:
        raise ValueError(f"rescaled spacing {spacing:g} exceeds R/{RESOLUTION} = {R / RESOLUTION:g}")
    c = np.asarray(center, dtype=np.float64)
    near = np.sort(np.asarray(cloud.tree.query_ball_point(c, lam * R * (1 + 1e-9)), dtype=np.int64))
    pts = (cloud.points[near] - c) / lam
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= R]
    return Window(cloud.label, tuple(c.tolist()), float(lam), float(R), pts, spacing, center_index)


def window_component_count(w: Window, eps: float) -> int:
    """Components of the graph joining window points at rescaled distance <= eps."""
    if eps < EPS_FIDELITY * w.spacing * (1 - 1e-12):
        raise ValueError(f"eps {eps:g} is below {EPS_FIDELITY} x rescaled spacing = {EPS_FIDELITY * w.spacing:g}")
    n, _ = proximity_components(w.points, eps)
    return n


def lambda_grid(cloud: PointCloud, R: float, eps: float, j_min: int = 1, j_max: int = 60):
    """Dyadic lam = 2^-j, j >= j_min, down to the finest lam passing both resolution guards."""
    out = []
    for j in range(j_min, j_max + 1):
        lam = 2.0 ** (-j)
        s = cloud.spacing / lam
        if s > R / RESOLUTION or eps < EPS_FIDELITY * s:
            break
        if lam * R <= cloud.diameter():
            out.append(lam)
    return out


@dataclass
class SweepRow:
    center_index: int
    lam: float
    eps: float
    count: int


def tangent_sweep(cloud: PointCloud, centers, lam_grid, eps_grid, R: float = 1.0):
    rows = []
    for i in centers:
        for lam in lam_grid:
            w = rescaled_window(cloud, cloud.points[i], lam, R, int(i))
            for eps in eps_grid:
                rows.append(SweepRow(int(i), float(lam), float(eps), window_component_count(w, eps)))
    return rows


def write_sweep(rows, path):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["center_index", "lambda", "eps", "count"])
        for r in rows:
            wr.writerow([r.center_index, repr(r.lam), repr(r.eps), r.count])
