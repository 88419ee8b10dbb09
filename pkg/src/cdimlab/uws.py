"""Discrete uniformly-well-spread (UWS) cuts.

A query (x, r, eps) asks for a small set K near the annulus B(x, 2r) \\ B(x, r) such that
every discrete eps*r-path crossing the annulus passes within eps*r of K. Cuts come from a
minimum vertex cut on a 2*eps*r-net; each is then re-checked against the definition
directly on the cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .geometry import PointCloud
from .modulus import PathFamily, min_vertex_cut, overlap_edges
from .nets import CellComponents, check_fidelity, extract_net, stride_centers
from .svg import cloud_svg

DEFAULT_CAP = 50


class CutVerificationError(RuntimeError):
    pass


@dataclass(frozen=True)
class UWSQuery:
    x: tuple
    r: float
    eps: float
    x_index: int | None = None

    def validate(self, cloud: PointCloud):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if not 0 < self.r < cloud.diameter():
            raise ValueError("r must lie in (0, diam)")
        check_fidelity(self.eps * self.r, cloud, "eps*r")


@dataclass
class CutReport:
    """``cut_points`` is the min cut pruned to a minimal subset that still passes the
    definition check; ``min_cut_size`` and ``n_disjoint_paths`` are the Menger pair on the
    net graph."""

    query: UWSQuery
    cut_size: int
    vacuous: bool
    cut_points: np.ndarray
    min_cut_size: int
    n_disjoint_paths: int
    n_net: int
    verified: bool | None = None

    def to_dict(self):
        return {
            "x": [float(c) for c in self.query.x],
            "x_index": self.query.x_index,
            "r": self.query.r,
            "eps": self.query.eps,
            "cut_size": self.cut_size,
            "vacuous": self.vacuous,
            "verified": self.verified,
            "min_cut_size": self.min_cut_size,
            "n_disjoint_paths": self.n_disjoint_paths,
            "n_net": self.n_net,
            "cut": [[float(a), float(b)] for a, b in self.cut_points],
        }


@dataclass
class UWSReport:
    entries: list
    cap: int = DEFAULT_CAP
    meta: dict = field(default_factory=dict)

    @property
    def empirical_constant(self):
        return max((e.cut_size for e in self.entries), default=0)

    @property
    def failures(self):
        return [e for e in self.entries if e.cut_size > self.cap]

    def to_dict(self):
        return {
            **self.meta,
            "cap": self.cap,
            "empirical_constant": self.empirical_constant,
            "n_queries": len(self.entries),
            "n_failures": len(self.failures),
            "entries": [e.to_dict() for e in self.entries],
        }


def _ball(cloud, x, R):
    d = np.hypot(*(cloud.points - np.asarray(x)).T)
    return np.flatnonzero(d < R), d


class _Verifier:
    """Definition check for one query, with the eps*r-proximity graph built once.

    A crossing path can be cut at its first point outside the closed 2r-ball, which lies
    within 2r + eps*r < 3r of x, so only cloud points in B(x, 3r) matter.
    """

    def __init__(self, cloud, q, block_factor=1.0):
        x = np.asarray(q.x, dtype=np.float64)
        self.er = q.eps * q.r
        self.block = block_factor * self.er
        idx, d = _ball(cloud, x, 3 * q.r)
        self.pts, d = cloud.points[idx], d[idx]
        self.src, self.dst = d < q.r, d > 2 * q.r
        self.tree = cKDTree(self.pts) if len(self.pts) else None
        self.cells = CellComponents(self.pts, self.er)

    def blocked(self, K):
        mask = np.zeros(len(self.pts), dtype=bool)
        for k in np.asarray(K, dtype=np.float64).reshape(-1, 2):
            # open neighbourhood: points at distance exactly block are not blocked
            near = self.tree.query_ball_point(k, self.block)
            if near:
                near = np.asarray(near)
                dk = np.hypot(*(self.pts[near] - k).T)
                mask[near[dk < self.block]] = True
        return mask

    def check(self, K) -> bool:
        if not self.src.any() or not self.dst.any():
            return True
        keep = ~self.blocked(K)
        src, dst = self.src & keep, self.dst & keep
        if not src.any() or not dst.any():
            return True
        _, labels = self.cells.labels(keep)
        return not np.intersect1d(labels[src], labels[dst]).size

    def prune(self, K):
        """Drop cut points one at a time (in order) while the check still passes."""
        K = [np.asarray(k) for k in K]
        i = 0
        while i < len(K):
            trial = K[:i] + K[i + 1:]
            if self.check(trial):
                K = trial
            else:
                i += 1
        return np.asarray(K, dtype=np.float64).reshape(-1, 2)


def uws_cut(cloud: PointCloud, q: UWSQuery, block_factor: float = 1.0) -> CutReport:
    """Min vertex cut on the 2*eps*r-net of B(x, 3r) with edges d < 10*eps*r, between
    A = {d(v,x) < r + 2 eps r} and A' = {d(v,x) > 2r - 2 eps r}, then pruned.

    On that graph a crossing arc needs several consecutive net points to be cut (edges span
    about five net spacings), while the definition only needs one point per arc; pruning
    against the definition check removes that overcount.
    """
    q.validate(cloud)
    x = np.asarray(q.x, dtype=np.float64)
    er = q.eps * q.r
    inside, _ = _ball(cloud, x, 3 * q.r)
    sub = PointCloud(cloud.points[inside], cloud.spacing, label=cloud.label)
    net = extract_net(sub, 2 * er)
    pts = sub.points[net.members]
    adj = overlap_edges(pts, 10 * er)
    d = np.hypot(*(pts - x).T)
    A = d < q.r + 2 * er
    A_prime = d > 2 * q.r - 2 * er
    if not A.any() or not A_prime.any():
        return CutReport(q, 0, True, np.zeros((0, 2)), 0, 0, len(pts), True)
    cut = min_vertex_cut(PathFamily(adj, A, A_prime))
    verifier = _Verifier(cloud, q, block_factor)
    K = verifier.prune(pts[cut.vertices])
    return CutReport(q, len(K), False, K, cut.size, len(cut.disjoint_paths), len(pts),
                     verifier.check(K))


def verify_cut(cloud: PointCloud, q: UWSQuery, K, block_factor: float = 1.0) -> bool:
    """With the block_factor*eps*r-neighbourhood of K removed, no discrete eps*r-path in the
    cloud joins B(x, r) to the complement of the closed B(x, 2r)."""
    return _Verifier(cloud, q, block_factor).check(K)


def uws_sweep(cloud: PointCloud, r_grid, eps_grid, centers=None, n_centers: int = 8,
              cap: int = DEFAULT_CAP, block_factor: float = 1.0) -> UWSReport:
    """Cuts over centers x r_grid x eps_grid, each checked against the definition; a failed
    check is fatal."""
    if centers is None:
        centers = stride_centers(len(cloud), n_centers)
    entries = []
    for i in centers:
        x = tuple(float(c) for c in cloud.points[i])
        for r in r_grid:
            for eps in eps_grid:
                q = UWSQuery(x, float(r), float(eps), int(i))
                rep = uws_cut(cloud, q, block_factor)
                if not rep.verified:
                    raise CutVerificationError(
                        f"cut of size {rep.cut_size} at x_index={i}, r={r}, eps={eps} fails the definition check"
                    )
                entries.append(rep)
    return UWSReport(entries, cap, {
        "label": cloud.label,
        "r_grid": [float(r) for r in r_grid],
        "eps_grid": [float(e) for e in eps_grid],
        "centers": [int(i) for i in centers],
        "block_factor": block_factor,
    })


def cut_svg(cloud: PointCloud, rep: CutReport, path):
    x, r = np.asarray(rep.query.x), rep.query.r
    idx, _ = _ball(cloud, x, 3 * r)
    cloud_svg(cloud.points[idx], path, highlight=rep.cut_points, circles=[(x, r), (x, 2 * r)],
              title=f"r={r:g} eps={rep.query.eps:g} |K|={rep.cut_size}")


def report_valid(report: UWSReport) -> bool:
    return all(e.verified for e in report.entries) and report.empirical_constant == max(
        (e.cut_size for e in report.entries), default=0
    ) and not math.isnan(report.empirical_constant)
