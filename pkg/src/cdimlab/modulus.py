"""Level graphs, annulus path families and combinatorial p-modulus.

A vertex path's weight under rho is the sum of rho over all its vertices, endpoints
included. Families are described by a source set A and a sink set A' on a graph; the
family is every vertex path from A to A'.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, minimize
from scipy.sparse.csgraph import breadth_first_order, connected_components, maximum_flow
from scipy.spatial import cKDTree

from . import _backend
from .geometry import PointCloud, ResourceLimitError
from .nets import SeparatedNet, check_fidelity, extract_net

LAMBDA_DEFAULT = 32.0
LAMBDA_RIGOROUS = 32.0
KKT_TOL = 1e-8
FEAS_TOL = 1e-6
GAP_TOL = 1e-10
MAX_EDGES = 5_000_000
BRUTE_MAX_VERTICES = 14
# violating paths added per cutting-plane round
CUT_BATCH = 8
BLOCKED = 1e12  # vertex weight standing in for deletion
_REL = 1e-12
_ULP = 2.0 ** -52


def _outward(value, n, p):
    """Round an upper bound up past the float error of the Dijkstra sums (n terms each,
    entering through W^-p) and of the n-term sum of powers."""
    return value * (1 + (p + 1) * (n + 4) * _ULP)


class ModulusNotConverged(RuntimeError):
    def __init__(self, message, lower, upper, iterations):
        super().__init__(f"{message} (lower={lower:.6g}, upper={upper:.6g}, iterations={iterations})")
        self.lower = lower
        self.upper = upper
        self.iterations = iterations


# graphs and families


@dataclass(frozen=True, eq=False)
class ApproxGraph:
    """Graph on net points: u ~ v iff 0 < d(u, v) < 2*lam*scale.

    ``members`` are cloud indices of the vertices, which may be a cropped subset of
    ``net.members``.
    """

    net: SeparatedNet
    a: float | None
    lam: float
    k: int | None
    members: np.ndarray
    points: np.ndarray
    adjacency: sp.csr_matrix

    @property
    def scale(self):
        return self.net.scale

    @property
    def n(self):
        return len(self.members)

    @property
    def n_edges(self):
        return self.adjacency.nnz // 2

    @property
    def heuristic(self):
        return self.lam < LAMBDA_RIGOROUS

    def degrees(self):
        return np.diff(self.adjacency.indptr)

    def edges(self):
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]])

    def write_edges(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["u", "v"])
            w.writerows(self.edges().tolist())


def _estimate_edges(points, radius, n_sample=256):
    n = len(points)
    if n < 2:
        return 0
    tree = cKDTree(points)
    step = max(1, n // n_sample)
    counts = tree.query_ball_point(points[::step], radius, return_length=True)
    return int(n * (float(np.mean(counts)) - 1) / 2)


def overlap_edges(points, radius, max_edges=MAX_EDGES) -> sp.csr_matrix:
    """Symmetric adjacency of pairs with 0 < d < radius."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    est = _estimate_edges(points, radius)
    if est > max_edges:
        raise ResourceLimitError(f"graph would have ~{est} edges (limit {max_edges})")
    if n < 2:
        return sp.csr_matrix((n, n), dtype=np.int8)
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    if len(pairs):
        d = np.hypot(*(points[pairs[:, 0]] - points[pairs[:, 1]]).T)
        pairs = pairs[(d < radius) & (d > 0)]
    if len(pairs) > max_edges:
        raise ResourceLimitError(f"graph has {len(pairs)} edges (limit {max_edges})")
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return adj


def graph_from_net(net: SeparatedNet, lam: float, a=None, k=None, crop=None, max_edges=MAX_EDGES) -> ApproxGraph:
    """``crop = (center, R)`` keeps net vertices with d(v, center) < R."""
    if lam < 1:
        raise ValueError("lam must be >= 1")
    members = net.members
    pts = net.cloud.points[members]
    if crop is not None:
        c, R = np.asarray(crop[0], dtype=np.float64), float(crop[1])
        keep = np.hypot(*(pts - c).T) < R
        members, pts = members[keep], pts[keep]
    adj = overlap_edges(pts, 2 * lam * net.scale, max_edges)
    return ApproxGraph(net, a, float(lam), k, members, pts, adj)


def build_level_graph(cloud: PointCloud, a: float, lam: float = LAMBDA_DEFAULT, k: int = 0,
                      net=None, crop=None) -> ApproxGraph:
    if a <= 1:
        raise ValueError("a must exceed 1")
    scale = float(a) ** (-k)
    if net is None:
        net = extract_net(cloud, scale)
    else:
        check_fidelity(scale, cloud, "level scale")
    return graph_from_net(net, lam, a, k, crop)


def build_scale_graph(cloud: PointCloud, scale: float, lam: float = LAMBDA_DEFAULT, crop=None) -> ApproxGraph:
    """Same construction at an arbitrary net scale (not tied to a level)."""
    return graph_from_net(extract_net(cloud, scale), lam, None, None, crop)


def path_graph(n: int) -> sp.csr_matrix:
    rows = np.arange(n - 1)
    return edges_to_csr(n, np.column_stack([rows, rows + 1]))


def edges_to_csr(n, edges) -> sp.csr_matrix:
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    edges = edges[edges[:, 0] != edges[:, 1]]
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    adj = sp.csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    adj.data[:] = 1
    adj.sort_indices()
    return adj


def _mask(n, idx):
    m = np.zeros(n, dtype=bool)
    m[np.asarray(list(idx), dtype=np.int64)] = True
    return m


@dataclass(frozen=True, eq=False)
class PathFamily:
    """All vertex paths in ``adjacency`` starting in A and ending in A'."""

    adjacency: sp.csr_matrix
    A: np.ndarray
    A_prime: np.ndarray
    graph: ApproxGraph | None = None
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n, edges, A, A_prime, **meta):
        return cls(edges_to_csr(n, edges), _mask(n, A), _mask(n, A_prime), None, meta)

    @classmethod
    def on_graph(cls, graph: ApproxGraph, A, A_prime, **meta):
        return cls(graph.adjacency, _mask(graph.n, A), _mask(graph.n, A_prime), graph, meta)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def degenerate(self):
        return bool(np.any(self.A & self.A_prime))

    def reachable(self):
        """Mask of vertices reachable from A."""
        _, labels = connected_components(self.adjacency, directed=False)
        return np.isin(labels, labels[self.A])

    def is_empty(self):
        if not self.A.any() or not self.A_prime.any():
            return True
        return not np.any(self.reachable() & self.A_prime)

    def with_sets(self, A, A_prime):
        return PathFamily(self.adjacency, _mask(self.n, A), _mask(self.n, A_prime), self.graph, dict(self.meta))


def crop_radius(a, lam, m, k):
    """Paths leave the closed 2a^-m ball by a single edge, so nothing beyond this radius matters."""
    return (2 * float(a) ** (-m) + 2 * lam * float(a) ** (-(m + k))) * (1 + 1e-9)


def annulus_family(cloud: PointCloud, a: float, lam: float, x, m: int, k: int, net=None) -> PathFamily:
    """Paths in G_{m+k} from the open ball B(x, a^-m) to outside the closed ball B(x, 2 a^-m).

    The graph is cropped to the vertices within ``crop_radius`` of x. Every family path has a
    sub-path (ending at its first vertex outside the closed ball) inside the crop, and sub-paths
    only tighten admissibility, so the crop leaves the modulus unchanged.
    """
    x = np.asarray(x, dtype=np.float64)
    r = float(a) ** (-m)
    g = build_level_graph(cloud, a, lam, m + k, net=net, crop=(x, crop_radius(a, lam, m, k)))
    d = np.hypot(*(g.points - x).T)
    A = np.flatnonzero(d < r)
    A_prime = np.flatnonzero(d > 2 * r)
    return PathFamily.on_graph(g, A, A_prime, center=x.tolist(), m=m, k=k, a=a, lam=lam)


# admissibility


@dataclass
class Admissibility:
    admissible: bool
    weight: float
    path: list


def _trace(pred, v):
    path = [int(v)]
    while pred[path[-1]] >= 0:
        path.append(int(pred[path[-1]]))
    return path[::-1]


def shortest_paths(family: PathFamily, rho):
    """Vertex-weighted Dijkstra from A; returns (dist, pred)."""
    return _backend.vertex_dijkstra(family.adjacency, rho, family.A)


def min_path(family: PathFamily, rho):
    """Least-weight A-A' path (weight, vertices) or (inf, []) when none exists."""
    rho = np.asarray(rho, dtype=np.float64)
    dist, pred = shortest_paths(family, rho)
    targets = np.flatnonzero(family.A_prime & np.isfinite(dist))
    if len(targets) == 0:
        return math.inf, []
    # smallest index among ties keeps this deterministic
    t = int(targets[np.argmin(dist[targets])])
    return float(dist[t]), _trace(pred, t)


def is_admissible(rho, family: PathFamily, slack: float = 0.0) -> Admissibility:
    rho = np.asarray(rho, dtype=np.float64)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise ValueError("rho must be finite and nonnegative")
    w, path = min_path(family, rho)
    return Admissibility(w >= 1 - slack, w, path)


# minimum vertex cuts


@dataclass
class CutSet:
    vertices: list
    disjoint_paths: list | None = None

    @property
    def size(self):
        return len(self.vertices)

    def to_dict(self):
        out = {"size": self.size, "vertices": [int(v) for v in self.vertices]}
        if self.disjoint_paths is not None:
            out["n_disjoint_paths"] = len(self.disjoint_paths)
        return out


def min_vertex_cut(family: PathFamily, with_paths: bool = True) -> CutSet:
    """Minimum A-A' vertex separator by node splitting and max flow.

    Vertex v becomes v_in = v and v_out = v + n joined by a unit-capacity arc; graph edges
    and terminal arcs get capacity n + 1, which no cut can afford to use.
    """
    n = family.n
    if family.is_empty():
        return CutSet([], [] if with_paths else None)
    S, T = 2 * n, 2 * n + 1
    big = n + 1
    coo = family.adjacency.tocoo()
    a_idx = np.flatnonzero(family.A)
    b_idx = np.flatnonzero(family.A_prime)
    rows = np.concatenate([np.arange(n), coo.row + n, np.full(len(a_idx), S), b_idx + n])
    cols = np.concatenate([np.arange(n) + n, coo.col, a_idx, np.full(len(b_idx), T)])
    caps = np.concatenate([np.ones(n), np.full(coo.nnz, big), np.full(len(a_idx), big), np.full(len(b_idx), big)])
    C = sp.csr_matrix((caps.astype(np.int32), (rows, cols)), shape=(2 * n + 2, 2 * n + 2))
    res = maximum_flow(C, S, T, method="dinic")
    F = res.flow.tocsr()

    residual = (C - F).tocsr()
    residual.data[residual.data < 0] = 0
    residual.eliminate_zeros()
    seen = np.zeros(2 * n + 2, dtype=bool)
    seen[breadth_first_order(residual, S, directed=True, return_predecessors=False)] = True
    cut = [int(v) for v in range(n) if seen[v] and not seen[v + n]]
    if len(cut) != res.flow_value:
        raise AssertionError("max-flow/min-cut mismatch")

    paths = None
    if with_paths:
        Fp = F.copy()
        Fp.data[Fp.data < 0] = 0
        Fp.eliminate_zeros()
        Fp = Fp.tolil()
        paths = []
        starts = [int(j) for j in Fp.rows[S]]
        for s in starts:
            path, node = [], s
            while node != T:
                v = node
                path.append(v)
                out = v + n  # v_in -> v_out carries the unit
                # integral unit flow leaves v_out along exactly one arc
                node = min(int(j) for j in Fp.rows[out])
                Fp[out, node] = 0
            paths.append(path)
        if len(paths) != len(cut):
            raise AssertionError("Menger duality violated")
    return CutSet(cut, paths)


def lower_bound_from_disjoint_paths(paths, p: float) -> float:
    """Sum of |path|^(1-p): each disjoint path alone forces that much mass (Hölder)."""
    seen = set()
    for path in paths:
        s = set(int(v) for v in path)
        if len(s) != len(path) or seen & s:
            raise ValueError("paths must be simple and pairwise vertex-disjoint")
        seen |= s
    total = sum(len(path) ** (1 - p) for path in paths)
    if p == 1:
        return float(total)
    # rounded down past the accumulated floating-point error, so the bound stays rigorous
    return float(total) * (1 - (len(paths) + 4) * _ULP)


# p-modulus


@dataclass
class ModulusResult:
    p: float
    value: float
    rho: np.ndarray
    active_paths: list
    iterations: int
    kkt_residual: float
    min_path_weight: float
    lower_bound: float
    empty: bool = False

    def to_dict(self):
        return {
            "p": self.p,
            "value": self.value,
            "n_active_paths": len(self.active_paths),
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "min_path_weight": self.min_path_weight if math.isfinite(self.min_path_weight) else None,
        }


class _Dual:
    """Concave dual of min sum rho^p s.t. N rho >= 1, rho >= 0 over the active paths.

    g(mu) = sum mu - (p-1) sum_v (eta_v/p)^q with eta = N^T mu and q = p/(p-1);
    rho(mu) = (eta/p)^(1/(p-1)) and dg/dmu = 1 - N rho.
    """

    def __init__(self, N: sp.csr_matrix, p: float):
        self.N = N
        self.NT = N.T.tocsr()
        self.p = p
        self.q = p / (p - 1)
        self.e = 1 / (p - 1)

    def rho(self, mu):
        eta = self.NT @ mu
        with np.errstate(over="ignore"):
            return np.power(np.maximum(eta, 0) / self.p, self.e)

    def value(self, mu):
        eta = np.maximum(self.NT @ mu, 0)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(mu.sum() - (self.p - 1) * np.sum(np.power(eta / self.p, self.q)))

    def grad(self, mu):
        return 1 - self.N @ self.rho(mu)

    def kkt(self, mu):
        g = self.grad(mu)
        return float(np.max(np.abs(mu - np.maximum(0, mu + g)))) if len(mu) else 0.0

    def hess(self, mu, S):
        """Hessian block on the index set S (negative semidefinite)."""
        eta = np.maximum(self.NT @ mu, 0)
        with np.errstate(divide="ignore"):
            c = np.where(eta > 0, self.e / self.p * np.power(eta / self.p, self.e - 1), 0.0)
        NS = self.N[S]
        return -(NS.multiply(c[None, :]) @ NS.T).toarray()


def _solve_dual(dual: _Dual, mu0, tol):
    n = len(mu0)
    res = minimize(
        lambda m: (-dual.value(m), -dual.grad(m)),
        mu0, jac=True, method="L-BFGS-B", bounds=[(0, None)] * n,
        options={"maxiter": 20000, "ftol": 1e-15, "gtol": tol * 1e-2, "maxcor": 30},
    )
    mu = np.maximum(res.x, 0)
    _polish(dual, mu, tol)
    return mu, dual.kkt(mu)


def _independent_support(dual, mu, g):
    """Pivot along null directions of the support rows until the support paths are independent.

    Along a null direction eta is unchanged, so the dual moves linearly; the sign is chosen
    so that it does not decrease. Path rows are nonnegative, so every null vector has a
    negative entry and the ratio test always removes a multiplier.
    """
    while True:
        S = np.flatnonzero(mu > 0)
        if len(S) < 2:
            return S
        NS = dual.N[S].toarray()
        NS = NS[:, NS.any(axis=0)]
        # right singular vectors of N_S^T span the left null space of N_S
        _, sv, Vh = np.linalg.svd(NS.T, full_matrices=NS.shape[1] < len(S))
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        if rank == len(S):
            return S
        z = Vh[-1]
        if g[S] @ z < 0:
            z = -z
        neg = np.flatnonzero(z < -1e-14)
        if len(neg) == 0:
            z = -z
            neg = np.flatnonzero(z < -1e-14)
        ratios = mu[S][neg] / -z[neg]
        hit = neg[np.argmin(ratios)]
        mu[S] = np.maximum(0, mu[S] + ratios.min() * z)
        mu[S[hit]] = 0.0


def _enter(dual, mu, j):
    """Exact line search on the single multiplier j (the dual is concave along it)."""
    lo, hi = 0.0, 1.0
    base = mu[j]
    while True:
        mu[j] = base + hi
        if dual.grad(mu)[j] <= 0:
            break
        lo, hi = hi, 2 * hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        mu[j] = base + mid
        if dual.grad(mu)[j] > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    mu[j] = base + lo


def _polish(dual, mu, tol, max_steps=2000):
    """Active-set Newton on the dual, in place."""
    for _ in range(max_steps):
        g = dual.grad(mu)
        r = float(np.max(np.abs(mu - np.maximum(0, mu + g))))
        if r <= tol:
            return
        zero = np.flatnonzero(mu == 0)
        if len(zero):
            j = zero[np.argmax(g[zero])]
            if g[j] > tol:
                _enter(dual, mu, j)
                g = dual.grad(mu)
        S = _independent_support(dual, mu, g)
        if len(S) == 0:
            continue
        g = dual.grad(mu)
        # a vanishing multiplier that wants to shrink would cap the step near zero; drop it
        # (an ascent move, since its gradient is negative)
        tiny = S[(mu[S] <= 1e-9 * mu[S].max()) & (g[S] < 0)]
        if len(tiny):
            mu[tiny] = 0.0
            continue
        cand = _newton_step(dual, mu, S, g)
        if cand is None:
            return
        mu[:] = cand


def _newton_step(dual, mu, S, g):
    """Damped Newton ascent on the support S; None when no damping gives an ascent step.

    For p near 1 the curvature (eta/p)^(1/(p-1)-1) vanishes on lightly loaded vertices, so
    -H can be singular to working precision even though the support rows are independent.
    The ridge is raised until the backtracking search accepts a step.
    """
    H = -dual.hess(mu, S)
    scale = float(np.max(np.diag(H))) if len(S) else 1.0
    f0 = dual.value(mu)
    for ridge in (0.0, 1e-12, 1e-8, 1e-4, 1.0):
        try:
            d = np.linalg.solve(H + ridge * scale * np.eye(len(S)), g[S])
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(d)):
            continue
        neg = d < 0
        ratios = mu[S][neg] / -d[neg]
        amax = float(ratios.min()) if neg.any() else np.inf
        slope = float(g[S] @ d)
        alpha = min(1.0, amax)
        while alpha > 1e-12:
            cand = mu.copy()
            cand[S] = np.maximum(0, mu[S] + alpha * d)
            if alpha == amax:
                cand[S[neg][np.argmin(ratios)]] = 0.0
            if dual.value(cand) >= f0 + 1e-4 * alpha * slope - 4e-16 * max(1.0, abs(f0)):
                return cand
            alpha *= 0.5
    return None


def _paths_matrix(paths, n):
    rows = np.concatenate([np.full(len(pth), i) for i, pth in enumerate(paths)])
    cols = np.concatenate([np.asarray(pth) for pth in paths])
    M = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(paths), n))
    M.sum_duplicates()
    M.data[:] = 1
    return M


def _violating_paths(family, rho, dist, pred, limit, threshold):
    """Up to ``limit`` distinct simple A-A' paths of weight < threshold, most violated first.

    Candidates are the cheapest paths through each vertex v: the branch of the tree grown
    from A that reaches v, joined to the branch of the tree grown from A' (weight
    dist_A(v) + dist_A'(v) - rho(v)). One tree alone yields one path per A' vertex, which
    starves the active set when many paths tie.
    """
    back, back_pred = _backend.vertex_dijkstra(family.adjacency, rho, family.A_prime)
    through = dist + back - rho
    cand = np.flatnonzero(np.isfinite(through) & (through < threshold))
    order = cand[np.lexsort((cand, through[cand]))]
    out, seen = [], set()
    for v in order:
        path = _trace(pred, v)[:-1] + _trace(back_pred, v)[::-1]
        key = tuple(path)
        if key in seen or len(set(path)) < len(path):
            continue
        seen.add(key)
        out.append(path)
        if len(out) >= limit:
            break
    return out


def _min_hop_path(family):
    w, path = min_path(family, np.ones(family.n))
    return path


def _empty_result(family, p):
    return ModulusResult(p, 0.0, np.zeros(family.n), [], 0, 0.0, math.inf, 0.0, True)


def _greedy_disjoint_paths(family):
    """Min-hop path, delete its vertices, repeat: a maximal (not maximum) disjoint family.

    Seeds the p = 1 loop without touching the max-flow, so the two routes stay independent.
    """
    w = np.ones(family.n)
    out = []
    while True:
        weight, path = min_path(family, w)
        if not path or weight >= BLOCKED:
            return out
        out.append(path)
        w[path] = BLOCKED


def _exact_sum(rho, W):
    """True when rho and W are small integers, so every float sum involved is exact."""
    return W == int(W) and np.all(rho == np.round(rho)) and float(np.sum(rho)) < 2.0 ** 52


def _modulus_1(family, feas, max_rounds):
    """min sum(rho) over admissible rho: LP over the active paths (HiGHS), Dijkstra separation."""
    n = family.n
    cap = max_rounds if max_rounds is not None else 10 * n
    paths = _greedy_disjoint_paths(family)
    keys = {tuple(pth) for pth in paths}
    lower, upper = 0.0, math.inf
    for it in range(1, cap + 1):
        N = _paths_matrix(paths, n)
        res = linprog(np.ones(n), A_ub=-N, b_ub=-np.ones(len(paths)), bounds=(0, None), method="highs")
        if res.status != 0:
            raise ModulusNotConverged(f"LP over active paths failed: {res.message}", lower, upper, it)
        rho = np.maximum(res.x, 0.0)
        lower = max(lower, float(res.fun) * (1 - (n + 4) * _ULP))
        dist, pred = shortest_paths(family, rho)
        W = float(np.min(dist[family.A_prime]))
        if W > 0:
            total = float(np.sum(rho)) / W
            upper = min(upper, total if _exact_sum(rho, W) else _outward(total, n, 1.0))
        if W >= 1 - feas:
            duals = -np.asarray(res.ineqlin.marginals)
            active = [paths[i] for i in np.flatnonzero(duals > 0)]
            return ModulusResult(1.0, upper, rho / W, active, it, 0.0, 1.0, lower)
        new = [pth for pth in _violating_paths(family, rho, dist, pred, CUT_BATCH, 1 - feas) if tuple(pth) not in keys]
        if not new:
            raise ModulusNotConverged("no new violating path found", lower, upper, it)
        for pth in new:
            keys.add(tuple(pth))
            paths.append(pth)
    raise ModulusNotConverged("cutting-plane round cap reached", lower, upper, cap)


def modulus_p(family: PathFamily, p: float, tol: float = KKT_TOL, feas: float = FEAS_TOL,
              max_rounds=None) -> ModulusResult:
    """Combinatorial p-modulus of the A-A' family.

    p = 1 is a linear program solved by the same cutting-plane loop (independently of the
    max-flow in ``min_vertex_cut``, whose size it must equal). For p > 1 the loop adds
    violating paths to an active set and solves the dual program over it. The returned rho
    is rescaled by the true minimum path weight, so ``value`` is a rigorous upper bound and
    ``lower_bound`` (the dual value over the active paths) a rigorous lower bound.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    p = float(p)
    n = family.n
    if family.is_empty():
        return _empty_result(family, p)
    if p == 1:
        return _modulus_1(family, feas, max_rounds)

    cap = max_rounds if max_rounds is not None else 10 * n
    # seed: the min-hop path plus a maximum set of vertex-disjoint paths (Menger)
    paths, keys = [], set()
    for pth in [_min_hop_path(family)] + min_vertex_cut(family).disjoint_paths:
        if tuple(pth) not in keys:
            keys.add(tuple(pth))
            paths.append(list(pth))
    mu = np.zeros(len(paths))
    lower, upper = 0.0, math.inf
    for it in range(1, cap + 1):
        dual = _Dual(_paths_matrix(paths, n), p)
        mu, kkt = _solve_dual(dual, mu, tol)
        lower = max(lower, dual.value(mu))
        rho = dual.rho(mu)
        dist, pred = shortest_paths(family, rho)
        W = float(np.min(dist[family.A_prime]))
        if W > 0:
            upper = min(upper, _outward(float(np.sum(np.power(rho / W, p))), n, p))
        # a closed duality gap certifies the value even when the KKT residual stalls (p near 1)
        if W >= 1 - feas and (kkt <= tol or upper - lower <= GAP_TOL * upper):
            rho = rho / W
            active = [paths[i] for i in np.flatnonzero(mu > 0)]
            return ModulusResult(p, _outward(float(np.sum(rho ** p)), n, p), rho, active, it, kkt, 1.0, lower)
        new = [pth for pth in _violating_paths(family, rho, dist, pred, CUT_BATCH, 1 - feas) if tuple(pth) not in keys]
        if not new:
            if kkt > tol:
                raise ModulusNotConverged("inner solve stalled above KKT tolerance", lower, upper, it)
            raise ModulusNotConverged("no new violating path found", lower, upper, it)
        for pth in new:
            keys.add(tuple(pth))
            paths.append(pth)
        mu = np.concatenate([mu, np.zeros(len(new))])
    raise ModulusNotConverged("cutting-plane round cap reached", lower, upper, cap)


# brute-force oracle


def enumerate_paths(family: PathFamily, max_vertices=BRUTE_MAX_VERTICES):
    """Simple A-A' paths that can carry a binding constraint.

    Kept paths meet A only at the start and A' only at the end and have no chords; any
    other path contains one of these as a vertex subset. Paths whose vertex set strictly
    contains another kept path's set are dropped for the same reason.
    """
    n = family.n
    if n > max_vertices:
        raise ValueError(f"brute force is limited to {max_vertices} vertices")
    adj = [set(family.adjacency.indices[family.adjacency.indptr[v]:family.adjacency.indptr[v + 1]].tolist())
           for v in range(n)]
    A, B = family.A, family.A_prime
    found = []

    def extend(path, onpath):
        u = path[-1]
        for v in sorted(adj[u]):
            if v in onpath or A[v]:
                continue
            # chord check: v may touch only its predecessor on the path
            if any(w in adj[v] for w in path[:-1]):
                continue
            path.append(v)
            onpath.add(v)
            if B[v]:
                found.append(tuple(path))
            else:
                extend(path, onpath)
            path.pop()
            onpath.discard(v)

    for a in np.flatnonzero(A):
        a = int(a)
        if B[a]:
            found.append((a,))
        else:
            extend([a], {a})
    sets = [frozenset(pth) for pth in found]
    keep = []
    for i, s in enumerate(sets):
        if not any(t < s for t in sets):
            keep.append(found[i])
    return sorted(set(keep))


def _barrier_primal(N, p, gap=1e-10):
    """Log-barrier Newton method on min sum rho^p s.t. N rho >= 1, rho >= 0.

    Returns (rho, certified duality gap). Works on rho directly and shares nothing with the
    dual solver used by ``modulus_p``.
    """
    N = N.toarray()
    m, n = N.shape
    rho = np.full(n, 2.0)
    t = 1.0
    while True:
        for _ in range(200):
            s = N @ rho - 1
            g = t * p * rho ** (p - 1) - N.T @ (1 / s) - 1 / rho
            H = np.diag(t * p * (p - 1) * rho ** (p - 2) + 1 / rho ** 2) + (N.T / s ** 2) @ N
            step = -np.linalg.solve(H, g)
            dec = -(g @ step)
            if dec / 2 <= 1e-12:
                break
            f0 = t * np.sum(rho ** p) - np.sum(np.log(s)) - np.sum(np.log(rho))
            alpha = 1.0
            while True:
                cand = rho + alpha * step
                sc = N @ cand - 1
                if np.all(cand > 0) and np.all(sc > 0):
                    fc = t * np.sum(cand ** p) - np.sum(np.log(sc)) - np.sum(np.log(cand))
                    if fc <= f0 - 0.25 * alpha * dec or alpha < 1e-10:
                        break
                alpha *= 0.5
            rho = cand
        if (m + n) / t <= gap:
            return rho, (m + n) / t
        t *= 8


def modulus_bruteforce(family: PathFamily, p: float, gap: float = 1e-10) -> float:
    """Independent oracle: explicit path enumeration plus a generic convex solve."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if family.n > BRUTE_MAX_VERTICES:
        raise ValueError(f"brute force is limited to {BRUTE_MAX_VERTICES} vertices")
    paths = enumerate_paths(family)
    if not paths:
        return 0.0
    N = _paths_matrix(paths, family.n)
    if p == 1:
        res = linprog(np.ones(family.n), A_ub=-N.toarray(), b_ub=-np.ones(len(paths)),
                      bounds=[(0, None)] * family.n, method="highs")
        if res.status != 0:
            raise RuntimeError(res.message)
        return float(res.fun)
    rho, _ = _barrier_primal(N, float(p), gap)
    W = float((N @ rho).min())
    return float(np.sum((rho / W) ** p))


# upper-bound certificate


@dataclass
class Certificate:
    admissible: bool
    rho: np.ndarray
    support: list
    value: float | None
    p: float
    k: int
    outer_cut: list
    levels: dict
    violation: Admissibility | None = None
    heuristic: bool = False

    def to_dict(self):
        out = {
            "admissible": self.admissible,
            "p": self.p,
            "k": self.k,
            "value": self.value,
            "support_size": len(self.support),
            "outer_cut_size": len(self.outer_cut),
            "heuristic": self.heuristic,
        }
        if self.violation is not None:
            out["violating_path"] = self.violation.path
            out["violating_weight"] = self.violation.weight
        return out


def upper_bound_certificate(cloud: PointCloud, a: float, lam: float, x, m: int, k: int, p: float,
                            heuristic: bool = False, family=None, net=None) -> Certificate:
    """Explicit admissible rho = 3/k on nested-annulus cut sets.

    Cuts the outer family once, then around each cut vertex z separates B(z, a^-i r) from the
    complement of the closed B(z, 2 a^-i r) for i = 1..k/2 on the same graph. Every family path
    passes through z and reaches distance > r/2 from it, so it crosses each of these annuli.
    The result is checked with ``is_admissible``; a failure is returned as a diagnostic.
    """
    if k % 2 or k < 2:
        raise ValueError("k must be even and >= 2")
    if a <= 10 and not heuristic:
        raise ValueError("the nested-annulus construction needs a > 10 (pass heuristic=True to override)")
    fam = family if family is not None else annulus_family(cloud, a, lam, x, m, k, net=net)
    n = fam.n
    if fam.is_empty():
        return Certificate(True, np.zeros(n), [], 0.0, p, k, [], {}, None, heuristic or lam < LAMBDA_RIGOROUS)
    outer = min_vertex_cut(fam, with_paths=False).vertices
    r = float(a) ** (-m)
    pts = fam.graph.points
    support, levels = set(), {}
    for z in outer:
        dz = np.hypot(*(pts - pts[z]).T)
        for i in range(1, k // 2 + 1):
            ri = float(a) ** (-i) * r
            sub = fam.with_sets(np.flatnonzero(dz < ri), np.flatnonzero(dz > 2 * ri))
            cut = min_vertex_cut(sub, with_paths=False).vertices
            levels[(int(z), i)] = cut
            support.update(cut)
    rho = np.zeros(n)
    support = sorted(support)
    rho[support] = 3.0 / k
    check = is_admissible(rho, fam)
    heur = heuristic or lam < LAMBDA_RIGOROUS
    if not check.admissible:
        return Certificate(False, rho, support, None, p, k, outer, levels, check, heur)
    return Certificate(True, rho, support, len(support) * (3.0 / k) ** p, p, k, outer, levels, None, heur)
