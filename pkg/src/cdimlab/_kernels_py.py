"""Pure-Python reference kernels, bit-compatible with the compiled ones."""

import heapq
import math

import numpy as np


def greedy_net(pts, eps):
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    x0 = float(pts[:, 0].min())
    y0 = float(pts[:, 1].min())
    eps2 = eps * eps
    xs = pts[:, 0].tolist()
    ys = pts[:, 1].tolist()
    cells = {}
    kept = []
    for i in range(n):
        xi, yi = xs[i], ys[i]
        cx = math.floor((xi - x0) / eps) + 1
        cy = math.floor((yi - y0) / eps) + 1
        ok = True
        for ox in (cx - 1, cx, cx + 1):
            for oy in (cy - 1, cy, cy + 1):
                for j in cells.get((ox, oy), ()):
                    dx = xi - xs[j]
                    dy = yi - ys[j]
                    if dx * dx + dy * dy < eps2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            kept.append(i)
            cells.setdefault((cx, cy), []).append(i)
    return np.asarray(kept, dtype=np.int64)


def vertex_dijkstra(indptr, indices, weights, sources):
    n = len(weights)
    w = np.asarray(weights, dtype=np.float64).tolist()
    ip = np.asarray(indptr).tolist()
    ix = np.asarray(indices).tolist()
    dist = [math.inf] * n
    pred = [-1] * n
    done = [False] * n
    heap = []
    for u in np.flatnonzero(np.asarray(sources)).tolist():
        dist[u] = w[u]
        heap.append((w[u], u))
    heapq.heapify(heap)
    while heap:
        d, u = heapq.heappop(heap)
        if done[u] or d > dist[u]:
            continue
        done[u] = True
        du = dist[u]
        for e in range(ip[u], ip[u + 1]):
            v = ix[e]
            if done[v]:
                continue
            nd = du + w[v]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
    return np.asarray(dist, dtype=np.float64), np.asarray(pred, dtype=np.int64)


def cell_links(pts, bounds, pairs, keep, delta):
    out = np.zeros(len(pairs), dtype=np.uint8)
    keep = np.asarray(keep, dtype=bool)
    for e, (t, u) in enumerate(np.asarray(pairs).tolist()):
        I = np.arange(bounds[t], bounds[t + 1])
        J = np.arange(bounds[u], bounds[u + 1])
        I, J = I[keep[I]], J[keep[J]]
        for c in range(0, len(I), 512):
            diff = pts[I[c:c + 512], None, :] - pts[None, J, :]
            if (np.sqrt(diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]) <= delta).any():
                out[e] = 1
                break
    return out
