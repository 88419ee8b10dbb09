"""Separated nets, proximity graphs, discrete paths and the metric probes built on them.

Probe verdicts are one-sided: a failure carries a certified counterexample, while
``holds`` only means no counterexample was found among the sampled queries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.spatial import cKDTree

from . import _backend
from .geometry import PointCloud

# net scales and probe resolutions must be at least this multiple of the sampling spacing
FIDELITY = 10.0
_REL = 1e-12

# strides for deterministic pair/center sampling (fixed primes)
PAIR_STRIDE_I = 7919
PAIR_STRIDE_J = 104729


def check_fidelity(scale, cloud: PointCloud, what="scale"):
    if scale < FIDELITY * cloud.spacing * (1 - _REL):
        raise ValueError(
            f"{what} {scale:.6g} is below the fidelity threshold "
            f"{FIDELITY:g} x spacing = {FIDELITY * cloud.spacing:.6g}"
        )


@dataclass(frozen=True, eq=False)
class SeparatedNet:
    cloud: PointCloud
    scale: float
    members: np.ndarray

    def __len__(self):
        return len(self.members)

    @property
    def points(self):
        return self.cloud.points[self.members]

    def min_separation(self) -> float:
        if len(self.members) < 2:
            return math.inf
        d, _ = cKDTree(self.points).query(self.points, k=2)
        return float(d[:, 1].min())

    def covering_radius(self) -> float:
        d, _ = cKDTree(self.points).query(self.cloud.points, k=1)
        return float(d.max())


@dataclass
class DiscretePath:
    vertices: list
    step_bound: float

    def __len__(self):
        return len(self.vertices)


@dataclass
class ProbeResult:
    probe: str
    params: dict
    verdict: str
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self):
        return self.verdict.startswith("holds")

    def to_dict(self):
        out = {"probe": self.probe, "params": self.params, "verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = self.witness
        out.update(self.details)
        return out


def extract_net(cloud: PointCloud, eps: float, check=True) -> SeparatedNet:
    """Greedy maximal eps-separated subset, scanning points in list order."""
    if check:
        check_fidelity(eps, cloud, "net scale")
    members = _backend.greedy_net(cloud.points, eps)
    return SeparatedNet(cloud, float(eps), members)


def proximity_graph(points, delta, strict=False) -> sp.csr_matrix:
    """Symmetric adjacency of pairs at distance <= delta (or < delta when strict)."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n < 2 or delta <= 0:
        return sp.csr_matrix((n, n), dtype=np.int8)
    pairs = cKDTree(points).query_pairs(delta, output_type="ndarray")
    if len(pairs):
        d = np.hypot(*(points[pairs[:, 0]] - points[pairs[:, 1]]).T)
        pairs = pairs[(d < delta) if strict else (d <= delta)]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return adj


def _bfs_path(adj, i, j):
    order, pred = breadth_first_order(adj, i, directed=False, return_predecessors=True)
    if i != j and pred[j] < 0:
        return None
    path = [j]
    while path[-1] != i:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def discrete_path_search(cloud: PointCloud, i: int, j: int, delta: float, confine=None):
    """Hop-minimal discrete delta-path from point i to point j, or None.

    ``confine = (center, R)`` restricts the path to the closed ball B(center, R).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n = len(cloud)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("index out of range")
    if i == j:
        return DiscretePath([i], delta)
    if confine is not None:
        c, R = np.asarray(confine[0], dtype=np.float64), float(confine[1])
        d = np.hypot(*(cloud.points - c).T)
        idx = np.flatnonzero(d <= R * (1 + _REL))
        pos = {int(v): t for t, v in enumerate(idx)}
        if i not in pos or j not in pos:
            raise ValueError("endpoints must lie inside the confining ball")
        sub = _bfs_path(proximity_graph(cloud.points[idx], delta), pos[i], pos[j])
        return None if sub is None else DiscretePath([int(idx[t]) for t in sub], delta)
    path = _bfs_path(proximity_graph(cloud.points, delta), i, j)
    return None if path is None else DiscretePath(path, delta)


def sample_pairs(n: int, n_pairs: int):
    """Deterministic stride sample of distinct index pairs."""
    if n < 2:
        return []
    out = []
    for t in range(n_pairs):
        i = (t * PAIR_STRIDE_I) % n
        j = (i + 1 + (t * PAIR_STRIDE_J) % (n - 1)) % n
        out.append((i, j))
    return out


def stride_centers(n: int, n_centers: int):
    n_centers = max(1, min(n, n_centers))
    return [int(t * n // n_centers) for t in range(n_centers)]


def uniformly_disconnected_probe(cloud: PointCloud, eps: float, n_pairs: int = 200) -> ProbeResult:
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    params = {"eps": eps, "n_pairs": n_pairs}
    pairs = sample_pairs(len(cloud), n_pairs)
    pts = cloud.points
    floor = FIDELITY * cloud.spacing * (1 - _REL)
    checked = skipped = 0
    for i, j in pairs:
        dij = float(np.hypot(*(pts[i] - pts[j])))
        if dij == 0:
            continue
        delta = eps * dij
        # steps below the fidelity floor probe the sampling, not the set
        if delta < floor:
            skipped += 1
            continue
        labels = CellComponents(pts, delta).labels()[1]
        checked += 1
        if labels[i] == labels[j]:
            path = discrete_path_search(cloud, i, j, delta)
            return ProbeResult(
                "disconnect", params, "fails",
                {"pair": [i, j], "delta": delta, "path": path.vertices},
                {"n_checked": checked, "n_below_fidelity": skipped},
            )
    verdict = "holds_at_sampled_pairs" if checked else "holds_vacuously"
    return ProbeResult("disconnect", params, verdict, None,
                       {"n_checked": checked, "n_below_fidelity": skipped})


def linear_connectivity_probe(cloud: PointCloud, pairs, L_grid):
    """Least L in the grid joining each pair by a d/4-path inside the closed ball B(x, L d)."""
    L_grid = [float(L) for L in L_grid]
    if any(L < 1 for L in L_grid) or L_grid != sorted(L_grid):
        raise ValueError("L_grid must be ascending with L >= 1")
    out = []
    for i, j in pairs:
        x, y = cloud.points[i], cloud.points[j]
        d = float(np.hypot(*(x - y)))
        if d == 0:
            out.append(L_grid[0] if L_grid else math.inf)
            continue
        best = math.inf
        for L in L_grid:
            if discrete_path_search(cloud, i, j, d / 4, confine=(x, L * d)) is not None:
                best = L
                break
        out.append(best)
    return out


def uniformly_perfect_probe(cloud: PointCloud, c: float, n_queries: int = 64, queries=None) -> ProbeResult:
    """Check that sampled closed annuli B(x, r) \\ B(x, c r) meet the cloud."""
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    pts = cloud.points
    if queries is None:
        diam = cloud.diameter()
        rmin = FIDELITY * cloud.spacing
        if diam < rmin:
            return ProbeResult("perfect", {"c": c}, "holds_vacuously", None, {"n_checked": 0})
        n_r = max(1, int(round(math.sqrt(n_queries))))
        radii = np.geomspace(rmin, diam, n_r)
        centers = stride_centers(len(cloud), max(1, n_queries // n_r))
        queries = [(i, float(r)) for i in centers for r in radii]
    tree = cloud.tree
    for i, r in queries:
        x = pts[i]
        near = tree.query_ball_point(x, r * (1 + _REL))
        d = np.hypot(*(pts[near] - x).T) if near else np.zeros(0)
        if not np.any((d >= c * r) & (d <= r * (1 + _REL))):
            return ProbeResult("perfect", {"c": c}, "fails", {"x_index": int(i), "r": r},
                               {"n_checked": len(queries)})
    return ProbeResult("perfect", {"c": c}, "holds_at_sampled_annuli", None, {"n_checked": len(queries)})


def _greedy_cover_count(points, radius):
    """Greedy max-coverage cover of ``points`` by closed radius-balls centred at points."""
    n = len(points)
    if n == 0:
        return 0
    adj = proximity_graph(points, radius) + sp.identity(n, dtype=np.int8, format="csr")
    adj = adj.astype(np.float64).tocsr()
    uncovered = np.ones(n)
    count = 0
    while uncovered.any():
        gain = adj @ uncovered
        best = int(np.argmax(gain))
        count += 1
        uncovered[adj[best].indices] = 0
    return count


def doubling_estimate(cloud: PointCloud, scale_grid, n_centers: int = 16) -> int:
    """Max greedy count of r/2-balls covering B(x, r) over sampled centers and scales.

    Balls are covered through an r/100-net of their points, so the count is an estimate.
    """
    if len(cloud) == 1:
        return 1
    for r in scale_grid:
        check_fidelity(r, cloud, "doubling scale")
    pts = cloud.points
    best = 1
    for i in stride_centers(len(cloud), n_centers):
        for r in scale_grid:
            near = np.asarray(cloud.tree.query_ball_point(pts[i], r), dtype=np.int64)
            near.sort()
            ball = pts[near]
            members = _backend.greedy_net(ball, r / 100)
            best = max(best, _greedy_cover_count(ball[members], r / 2))
    return best


class CellComponents:
    """Components of the graph joining points at distance <= delta, via union-find on cells.

    Cells have side slightly under delta/sqrt(2), so each cell is a clique; neighbouring
    cells (offsets up to 2) are linked when one close pair exists. Removing points keeps
    cells cliques, so after a removal only links touching affected cells are recomputed.
    """

    _OFFSETS = [(dx, dy) for dx in range(0, 3) for dy in range(-2, 3) if (dx, dy) > (0, 0)]

    def __init__(self, points, delta):
        self.pts = np.asarray(points, dtype=np.float64)
        self.delta = float(delta)
        n = len(self.pts)
        if n == 0:
            self.cell_of = np.zeros(0, dtype=np.int64)
            self.n_cells = 0
            return
        h = delta / math.sqrt(2) * (1 - 1e-9)
        c = np.floor((self.pts - self.pts.min(axis=0)) / h).astype(np.int64)
        ny = int(c[:, 1].max()) + 5
        key = (c[:, 0] + 2) * ny + (c[:, 1] + 2)
        uniq, cell_of = np.unique(key, return_inverse=True)
        self.cell_of = cell_of.ravel()
        self.n_cells = len(uniq)
        order = np.argsort(self.cell_of, kind="stable")
        self.order = order
        self.sorted_pts = np.ascontiguousarray(self.pts[order])
        self.bounds = np.searchsorted(self.cell_of[order], np.arange(self.n_cells + 1))
        pairs = []
        cells = np.arange(self.n_cells)
        for dx, dy in self._OFFSETS:
            target = uniq + dx * ny + dy
            u = np.minimum(np.searchsorted(uniq, target), self.n_cells - 1)
            hit = uniq[u] == target
            pairs.append(np.stack([cells[hit], u[hit]], axis=1))
        self.pairs = np.concatenate(pairs).astype(np.int64)
        self.close = _backend.cell_links(self.sorted_pts, self.bounds, self.pairs,
                                         np.ones(n, dtype=np.uint8), self.delta)

    def labels(self, keep=None):
        """(count, labels) over the kept points; removed points get label -1."""
        n = len(self.pts)
        if n == 0:
            return 0, np.zeros(0, dtype=np.int64)
        close = self.close.copy()
        if keep is not None and not keep.all():
            hit = np.zeros(self.n_cells, dtype=bool)
            hit[self.cell_of[~keep]] = True
            redo = np.flatnonzero(hit[self.pairs[:, 0]] | hit[self.pairs[:, 1]])
            close[redo] = _backend.cell_links(self.sorted_pts, self.bounds, self.pairs[redo],
                                              keep[self.order], self.delta)
        links = self.pairs[close]
        g = sp.csr_matrix((np.ones(len(links), dtype=np.int8), (links[:, 0], links[:, 1])),
                          shape=(self.n_cells, self.n_cells))
        _, cell_lab = connected_components(g, directed=False)
        lab = cell_lab[self.cell_of]
        kept = np.ones(n, dtype=bool) if keep is None else keep
        out = np.full(n, -1, dtype=np.int64)
        if kept.any():
            _, first, inv = np.unique(lab[kept], return_index=True, return_inverse=True)
            rank = np.empty(len(first), dtype=np.int64)
            rank[np.argsort(first, kind="stable")] = np.arange(len(first))
            out[kept] = rank[inv.ravel()]
            return len(first), out
        return 0, out


def proximity_components(points, delta) -> tuple[int, np.ndarray]:
    """Component count and labels (numbered by first appearance) at threshold delta."""
    return CellComponents(points, delta).labels()


def components(points, delta) -> tuple[int, np.ndarray]:
    return proximity_components(points, delta)
