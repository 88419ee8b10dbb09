# distutils: language = c++
"""Compiled inner loops. Semantics must match ``_kernels_py`` exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from libcpp.queue cimport priority_queue
from libcpp.pair cimport pair
from cython.operator cimport dereference

cnp.import_array()

ctypedef long long i64
ctypedef pair[double, i64] entry_t
ctypedef vector[Py_ssize_t] bucket_t


def greedy_net(const double[:, ::1] pts, double eps):
    """Indices kept by a first-come scan: a point survives iff it is >= eps from every kept point."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t i, t, j
    cdef double x0, y0, dx, dy, eps2 = eps * eps
    cdef long long cx, cy, ny, ox, oy
    cdef bint ok
    cdef unordered_map[i64, bucket_t] cells
    cdef unordered_map[i64, bucket_t].iterator it
    cdef bucket_t* bucket
    cdef vector[Py_ssize_t] kept
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    x0 = pts[0, 0]
    y0 = pts[0, 1]
    for i in range(n):
        if pts[i, 0] < x0:
            x0 = pts[i, 0]
        if pts[i, 1] < y0:
            y0 = pts[i, 1]
    ny = 0
    for i in range(n):
        cy = <long long>floor((pts[i, 1] - y0) / eps)
        if cy > ny:
            ny = cy
    ny += 3
    for i in range(n):
        cx = <long long>floor((pts[i, 0] - x0) / eps) + 1
        cy = <long long>floor((pts[i, 1] - y0) / eps) + 1
        ok = True
        for ox in range(cx - 1, cx + 2):
            if not ok:
                break
            for oy in range(cy - 1, cy + 2):
                it = cells.find(ox * ny + oy)
                if it == cells.end():
                    continue
                bucket = &dereference(it).second
                for t in range(<Py_ssize_t>bucket.size()):
                    j = bucket[0][t]
                    dx = pts[i, 0] - pts[j, 0]
                    dy = pts[i, 1] - pts[j, 1]
                    if dx * dx + dy * dy < eps2:
                        ok = False
                        break
                if not ok:
                    break
        if ok:
            kept.push_back(i)
            cells[cx * ny + cy].push_back(i)
    out = np.empty(kept.size(), dtype=np.int64)
    cdef long long[::1] ov = out
    for t in range(<Py_ssize_t>kept.size()):
        ov[t] = kept[t]
    return out


def vertex_dijkstra(const int[::1] indptr, const int[::1] indices, const double[::1] weights,
                    const cnp.uint8_t[::1] sources):
    """Multi-source shortest paths where a path costs the sum of its vertex weights.

    Returns (dist, pred); pred is -1 at sources and unreachable vertices.
    Ties are broken by smaller vertex index.
    """
    cdef Py_ssize_t n = weights.shape[0]
    dist_a = np.full(n, np.inf)
    pred_a = np.full(n, -1, dtype=np.int64)
    done_a = np.zeros(n, dtype=np.uint8)
    cdef double[::1] dist = dist_a
    cdef long long[::1] pred = pred_a
    cdef cnp.uint8_t[::1] done = done_a
    # max-heap on (-dist, -index) gives (min dist, min index) first
    cdef priority_queue[entry_t] heap
    cdef entry_t top
    cdef Py_ssize_t u, v, e
    cdef double nd
    for u in range(n):
        if sources[u]:
            dist[u] = weights[u]
            heap.push(entry_t(-dist[u], -u))
    while not heap.empty():
        top = heap.top()
        heap.pop()
        u = -top.second
        if done[u]:
            continue
        if -top.first > dist[u]:
            continue
        done[u] = 1
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if done[v]:
                continue
            nd = dist[u] + weights[v]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heap.push(entry_t(-nd, -v))
    return dist_a, pred_a


def cell_links(const double[:, ::1] pts, const long long[::1] bounds, const long long[:, ::1] pairs,
               const cnp.uint8_t[::1] keep, double delta):
    """For each cell pair (t, u): does a kept point of t lie within delta of a kept point of u?

    ``pts`` is sorted by cell, cell t owning rows bounds[t]:bounds[t+1].
    """
    cdef Py_ssize_t m = pairs.shape[0]
    cdef Py_ssize_t e, i, j
    cdef double dx, dy
    out_a = np.zeros(m, dtype=np.uint8)
    cdef cnp.uint8_t[::1] out = out_a
    for e in range(m):
        for i in range(bounds[pairs[e, 0]], bounds[pairs[e, 0] + 1]):
            if not keep[i]:
                continue
            for j in range(bounds[pairs[e, 1]], bounds[pairs[e, 1] + 1]):
                if not keep[j]:
                    continue
                dx = pts[i, 0] - pts[j, 0]
                dy = pts[i, 1] - pts[j, 1]
                if sqrt(dx * dx + dy * dy) <= delta:
                    out[e] = 1
                    break
            if out[e]:
                break
    return out_a
