"""Point-cloud stand-ins for compact planar sets, and generators for the model shapes.

All distances are Euclidean. The sets studied here have diameter at most 2, where the
Euclidean and spherical metrics are bi-Lipschitz equivalent; every quantity computed by
this package is invariant (up to constants) under such a change of metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

KINDS = ("segment", "circle", "square_boundary", "koch", "cantor", "quasi_tree", "spoked_curve")

# refuse to materialise clouds larger than this many points
MAX_POINTS = 20_000_000


class ResourceLimitError(RuntimeError):
    """A requested computation exceeds the configured size limits."""


@dataclass(frozen=True)
class ShapeSpec:
    kind: str
    params: dict = field(default_factory=dict)
    spacing: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError("spacing must be positive and finite")
        p = self.params
        if "level" in p and int(p["level"]) < 0:
            raise ValueError("levels must be >= 0")
        if self.kind == "cantor":
            ratio = float(p.get("ratio", 1 / 3))
            if not 0 < ratio < 1:
                raise ValueError("cantor gap ratio must lie in (0, 1)")
        if self.kind == "quasi_tree" and int(p.get("depth", 0)) < 0:
            raise ValueError("quasi_tree depth must be >= 0")
        if self.kind == "spoked_curve":
            a = float(p.get("a", 10))
            kmax = int(p.get("kmax", 0))
            if a < 10:
                raise ValueError("spoked_curve requires a >= 10")
            if kmax < 0:
                raise ValueError("kmax must be >= 0")
            if kmax >= 1 and self.spacing >= a ** (-kmax) / 4:
                raise ValueError(
                    f"spacing {self.spacing:g} cannot resolve spokes of radius {a ** -kmax:g}"
                )

    def to_dict(self):
        return {"kind": self.kind, "params": dict(self.params), "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], dict(d.get("params", {})), float(d.get("spacing", 1e-3)))


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite ordered sample of a planar set.

    ``window`` is ``(center, radius)`` when the cloud samples only the part of the
    shape inside a closed ball; ``parent_index`` maps back into a cropped-from cloud.
    """

    points: np.ndarray
    spacing: float
    label: str = ""
    metric: str = "euclidean"
    disconnected_by_design: bool = False
    spec: ShapeSpec | None = None
    window: tuple | None = None
    parent_index: np.ndarray | None = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
            raise ValueError("a cloud needs at least one 2D point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("cloud coordinates must be finite")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.metric != "euclidean":
            raise ValueError("only the euclidean metric is supported")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def tree(self) -> cKDTree:
        t = self.__dict__.get("_tree")
        if t is None:
            t = cKDTree(self.points)
            object.__setattr__(self, "_tree", t)
        return t

    def diameter(self) -> float:
        d = self.__dict__.get("_diam")
        if d is None:
            d = _diameter(self.points)
            object.__setattr__(self, "_diam", d)
        return d

    def crop(self, center, radius, closed=False) -> PointCloud:
        """Sub-cloud of points within ``radius`` of ``center``, original order kept."""
        c = np.asarray(center, dtype=np.float64)
        d = np.hypot(self.points[:, 0] - c[0], self.points[:, 1] - c[1])
        mask = d <= radius if closed else d < radius
        idx = np.flatnonzero(mask)
        if len(idx) == 0:
            raise ValueError("crop is empty")
        parent = idx if self.parent_index is None else self.parent_index[idx]
        return PointCloud(
            self.points[idx], self.spacing, self.label, self.metric,
            self.disconnected_by_design, self.spec, self.window, parent,
        )

    def scaled(self, s: float) -> PointCloud:
        return PointCloud(self.points * s, self.spacing * s, f"{self.label}*{s:g}",
                          disconnected_by_design=self.disconnected_by_design)


def _diameter(pts):
    if len(pts) == 1:
        return 0.0
    if len(pts) > 3:
        try:
            from scipy.spatial import ConvexHull

            pts = pts[ConvexHull(pts).vertices]
        except Exception:  # collinear input
            lo = np.argmin(pts[:, 0] + pts[:, 1] * 1e-9)
            hi = np.argmax(pts[:, 0] + pts[:, 1] * 1e-9)
            lo2, hi2 = np.argmin(pts[:, 1]), np.argmax(pts[:, 1])
            pts = pts[[lo, hi, lo2, hi2]]
        else:
            return _calipers(pts)
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _calipers(h):
    """Diameter of a convex polygon given counter-clockwise, by rotating calipers."""
    n = len(h)
    if n <= 3:
        diff = h[:, None, :] - h[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    def area2(i, j, k):
        return abs((h[j, 0] - h[i, 0]) * (h[k, 1] - h[i, 1]) - (h[j, 1] - h[i, 1]) * (h[k, 0] - h[i, 0]))

    best, j = 0.0, 1
    for i in range(n):
        i2 = (i + 1) % n
        while area2(i, i2, (j + 1) % n) > area2(i, i2, j):
            j = (j + 1) % n
        best = max(best, math.dist(h[i], h[j]), math.dist(h[i2], h[j]))
    return best


def distance(cloud: PointCloud, i: int, j: int) -> float:
    n = len(cloud)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"index out of range for cloud of {n} points")
    p, q = cloud.points[i], cloud.points[j]
    return math.hypot(p[0] - q[0], p[1] - q[1])


# ---------------------------------------------------------------- polylines

def _segment_samples(p, q, spacing, include_end, window):
    """Samples p + (j/n)(q - p), n = ceil(|q-p| / spacing), optionally clipped to a closed ball."""
    d = q - p
    length = math.hypot(d[0], d[1])
    n = max(2, math.ceil(length / spacing))
    jmax = n if include_end else n - 1
    j0, j1 = 0, jmax
    if window is not None:
        c, R = window
        # |p + t d - c|^2 <= R^2
        f = p - c
        A = d @ d
        B = 2 * (f @ d)
        C = f @ f - R * R
        disc = B * B - 4 * A * C
        if disc < 0:
            return np.zeros((0, 2))
        sq = math.sqrt(disc)
        t0, t1 = (-B - sq) / (2 * A), (-B + sq) / (2 * A)
        j0 = max(0, math.ceil(t0 * n) - 1)
        j1 = min(jmax, math.floor(t1 * n) + 1)
        if j1 < j0:
            return np.zeros((0, 2))
    js = np.arange(j0, j1 + 1, dtype=np.float64)
    pts = p[None, :] + (js / n)[:, None] * d[None, :]
    if window is not None:
        c, R = window
        pts = pts[np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= R]
    return pts


def _estimate_count(chains, spacing, window):
    total = 0.0
    for chain, _ in chains:
        seg = np.diff(chain, axis=0)
        lengths = np.hypot(seg[:, 0], seg[:, 1])
        if window is not None:
            c, R = window
            # a segment contributes at most min(length, 2R) inside the ball
            near = _segment_ball_hits(chain, c, R)
            lengths = np.where(near, np.minimum(lengths, 2 * R), 0.0)
        total += float(np.sum(np.maximum(lengths / spacing, 2)))
    return total


def _segment_ball_hits(chain, c, R):
    p, q = chain[:-1], chain[1:]
    d = q - p
    dd = np.maximum((d ** 2).sum(1), 1e-300)
    t = np.clip(((c - p) * d).sum(1) / dd, 0, 1)
    near = p + t[:, None] * d
    return np.hypot(near[:, 0] - c[0], near[:, 1] - c[1]) <= R


def _sample_chains(chains, spacing, window):
    """``chains`` is a list of (vertices, mode) with mode in {closed, open, open_skip_start}."""
    if _estimate_count(chains, spacing, window) > MAX_POINTS:
        raise ResourceLimitError(
            f"sampling at spacing {spacing:g} would exceed {MAX_POINTS} points; use a window"
        )
    out = []
    for verts, mode in chains:
        verts = np.asarray(verts, dtype=np.float64)
        if mode == "closed":
            verts = np.vstack([verts, verts[:1]])
        nseg = len(verts) - 1
        hits = _segment_ball_hits(verts, *window) if window is not None else None
        for s in range(nseg):
            if hits is not None and not hits[s]:
                continue
            last = mode != "closed" and s == nseg - 1
            pts = _segment_samples(verts[s], verts[s + 1], spacing, last, window)
            if mode == "open_skip_start" and s == 0 and len(pts):
                pts = pts[np.any(pts != verts[0], axis=1)]
            out.append(pts)
    pts = np.vstack(out) if out else np.zeros((0, 2))
    return pts


# ---------------------------------------------------------------- shapes

def spoke_arc_vertices(a: float, k: int) -> np.ndarray:
    """Vertices of the polygonal arc replacing (x_k, x_k + r_k), in visiting order."""
    xk = 2.0 ** (-k)
    rk = a ** (-k)
    w = lambda j, rad: (xk + rad * rk * math.cos(j * math.pi / (4 * k)),
                        rad * rk * math.sin(j * math.pi / (4 * k)))
    verts = [(xk, 0.0)]
    for j in range(2 * k, 0, -1):
        # even j: inner -> outer; odd j: outer -> inner
        order = (1, 2) if (2 * k - j) % 2 == 0 else (2, 1)
        verts += [w(j, order[0]), w(j, order[1])]
    verts.append((xk + rk, 0.0))
    return np.array(verts)


def spoked_curve_chain(a: float, kmax: int) -> np.ndarray:
    """Closed vertex chain of the unit square with the first kmax intervals replaced."""
    verts = [(0.0, 0.0)]
    for k in range(kmax, 0, -1):
        verts.extend(map(tuple, spoke_arc_vertices(a, k)))
    verts += [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    return np.array(verts)


def spoke_segments(a: float, k: int):
    """The 2k radial spokes of arc k as (inner point, outer point) pairs, j = 1..2k."""
    xk, rk = 2.0 ** (-k), a ** (-k)
    segs = []
    for j in range(1, 2 * k + 1):
        th = j * math.pi / (4 * k)
        u = np.array([math.cos(th), math.sin(th)])
        segs.append((np.array([xk, 0.0]) + rk * u, np.array([xk, 0.0]) + 2 * rk * u))
    return segs


def koch_chain(level: int) -> np.ndarray:
    pts = [0j, 1 + 0j]
    rot = complex(math.cos(math.pi / 3), math.sin(math.pi / 3))
    for _ in range(level):
        new = []
        for p, q in zip(pts[:-1], pts[1:]):
            d = (q - p) / 3
            new += [p, p + d, p + d + d * rot, p + 2 * d]
        new.append(pts[-1])
        pts = new
    return np.array([[z.real, z.imag] for z in pts])


def cantor_intervals(level: int, ratio: float):
    ivs = [(0.0, 1.0)]
    for _ in range(level):
        nxt = []
        for lo, hi in ivs:
            piece = (hi - lo) * (1 - ratio) / 2
            nxt += [(lo, lo + piece), (hi - piece, hi)]
        ivs = nxt
    return ivs


def quasi_tree_segments(depth: int, angle: float):
    """Symmetric binary dendrite: trunk (0,0)-(0,1/2); children turn by +-angle/2, half length."""
    segs = []
    frontier = [(np.array([0.0, 0.0]), math.pi / 2, 0.5)]
    for level in range(depth + 1):
        nxt = []
        for base, th, ln in frontier:
            tip = base + ln * np.array([math.cos(th), math.sin(th)])
            segs.append((base, tip, level))
            for s in (+1, -1):
                nxt.append((tip, th + s * angle / 2, ln / 2))
        frontier = nxt
    return segs


def _chains_for(spec: ShapeSpec):
    p = spec.params
    if spec.kind == "segment":
        return [(np.array([[0.0, 0.0], [float(p.get("length", 1.0)), 0.0]]), "open")], False
    if spec.kind == "square_boundary":
        return [(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]), "closed")], False
    if spec.kind == "koch":
        return [(koch_chain(int(p.get("level", 3))), "open")], False
    if spec.kind == "cantor":
        ivs = cantor_intervals(int(p.get("level", 3)), float(p.get("ratio", 1 / 3)))
        return [(np.array([[lo, 0.0], [hi, 0.0]]), "open") for lo, hi in ivs], True
    if spec.kind == "quasi_tree":
        segs = quasi_tree_segments(int(p.get("depth", 4)), float(p.get("angle", math.pi / 2)))
        chains = []
        for base, tip, level in segs:
            chains.append((np.array([base, tip]), "open" if level == 0 else "open_skip_start"))
        return chains, False
    if spec.kind == "spoked_curve":
        return [(spoked_curve_chain(float(p.get("a", 10)), int(p.get("kmax", 0))), "closed")], False
    raise ValueError(f"unknown shape kind {spec.kind!r}")


def _circle_points(spec: ShapeSpec, window):
    n = int(spec.params.get("n", math.ceil(2 * math.pi / spec.spacing)))
    if window is None:
        if n > MAX_POINTS:
            raise ResourceLimitError(f"circle with {n} points exceeds the size limit")
        js = np.arange(n)
    else:
        c, R = window
        rc = math.hypot(c[0], c[1])
        if rc == 0:
            js = np.arange(n) if R >= 1 else np.zeros(0, dtype=int)
        else:
            cos_min = (1 + rc * rc - R * R) / (2 * rc)
            if cos_min > 1:
                js = np.zeros(0, dtype=int)
            elif cos_min <= -1:
                js = np.arange(n)
            else:
                half = math.acos(cos_min)
                phi = math.atan2(c[1], c[0])
                j0 = math.floor((phi - half) * n / (2 * math.pi)) - 1
                j1 = math.ceil((phi + half) * n / (2 * math.pi)) + 1
                if j1 - j0 + 1 > MAX_POINTS:
                    raise ResourceLimitError("circle window exceeds the size limit")
                js = np.unique(np.mod(np.arange(j0, j1 + 1), n))
    th = 2 * np.pi * js / n
    pts = np.column_stack([np.cos(th), np.sin(th)])
    if window is not None and len(pts):
        c, R = window
        pts = pts[np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]) <= R]
    return pts, 2 * math.pi / n


def gen_shape(spec: ShapeSpec, window=None) -> PointCloud:
    """Sample ``spec`` at resolution <= spacing; optionally only inside the closed ball ``window``.

    Deterministic: the same spec (and window) always yields the same point list.
    """
    if window is not None:
        window = (np.asarray(window[0], dtype=np.float64), float(window[1]))
    if spec.kind == "circle":
        pts, spacing = _circle_points(spec, window)
        disconnected = False
    else:
        chains, disconnected = _chains_for(spec)
        pts = _sample_chains(chains, spec.spacing, window)
        spacing = spec.spacing
    if len(pts) == 0:
        raise ValueError("window does not meet the shape")
    label = spec.kind + "".join(f",{k}={v}" for k, v in sorted(spec.params.items()))
    if window is not None:
        label += f"@B(({window[0][0]:.17g},{window[0][1]:.17g}),{window[1]:.17g})"
    win = None if window is None else (tuple(window[0].tolist()), window[1])
    return PointCloud(pts, spacing, label, disconnected_by_design=disconnected, spec=spec, window=win)


# ---------------------------------------------------------------- serialization

def write_cloud(cloud: PointCloud, csv_path, meta_path=None, extra=None):
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("x,y\n")
        for x, y in cloud.points.tolist():
            fh.write(f"{x:.17g},{y:.17g}\n")
    if meta_path is not None:
        meta = {
            "kind": cloud.spec.kind if cloud.spec else None,
            "params": dict(cloud.spec.params) if cloud.spec else {},
            "spacing": cloud.spacing,
            "n_points": len(cloud),
        }
        if cloud.window is not None:
            meta["window"] = {"center": list(cloud.window[0]), "radius": cloud.window[1]}
        if extra:
            meta.update(extra)
        Path(meta_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def read_cloud(csv_path, meta_path=None) -> PointCloud:
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    spec = None
    spacing = None
    if meta_path is not None:
        meta = json.loads(Path(meta_path).read_text())
        spacing = meta["spacing"]
        if meta.get("kind"):
            spec = ShapeSpec(meta["kind"], meta.get("params", {}), spacing)
    if spacing is None:
        if len(data) > 1:
            spacing = float(cKDTree(data).query(data, k=2)[0][:, 1].max())
        else:
            spacing = 1.0
    return PointCloud(data, spacing, str(csv_path), spec=spec,
                      disconnected_by_design=bool(spec and spec.kind == "cantor"))
