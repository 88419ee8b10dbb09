import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import dijkstra

from cdimlab import _backend, _kernels_py
from cdimlab.nets import CellComponents

compiled = pytest.importorskip("cdimlab._kernels")
IMPLS = [_kernels_py, compiled]


def random_graph(rng, n, prob):
    a = sp.random(n, n, density=prob, random_state=rng, data_rvs=np.ones)
    a = ((a + a.T) > 0).astype(np.int8).tocsr()
    a.setdiag(0)
    a.eliminate_zeros()
    a.sort_indices()
    return a


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.floats(0.01, 0.3), st.integers(0, 2 ** 32 - 1))
def test_greedy_net_parity(n, eps, seed):
    pts = np.random.default_rng(seed).random((n, 2))
    a, b = (_backend.greedy_net(pts, eps, impl=m) for m in IMPLS)
    assert np.array_equal(a, b)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 80), st.integers(0, 2 ** 32 - 1))
def test_vertex_dijkstra_parity_and_oracle(n, seed):
    rng = np.random.default_rng(seed)
    adj = random_graph(rng, n, 0.1)
    w = rng.random(n)
    src = rng.random(n) < 0.2
    src[0] = True
    (d1, p1), (d2, p2) = (_backend.vertex_dijkstra(adj, w, src, impl=m) for m in IMPLS)
    assert np.array_equal(d1, d2) and np.array_equal(p1, p2)
    # vertex weights as weights on edges into the head, plus a super-source
    s = n
    rows, cols = adj.nonzero()
    rows = np.concatenate([rows, np.full(src.sum(), s)])
    cols = np.concatenate([cols, np.flatnonzero(src)])
    g = sp.csr_matrix((w[cols] + 1e-300, (rows, cols)), shape=(n + 1, n + 1))
    ref = dijkstra(g, indices=s)[:n]
    assert np.allclose(d1, ref, rtol=1e-12, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.floats(0.02, 0.3), st.integers(0, 2 ** 32 - 1))
def test_cell_links_parity(n, delta, seed):
    rng = np.random.default_rng(seed)
    cc = CellComponents(rng.random((n, 2)), delta)
    keep = (rng.random(n) < 0.7).astype(np.uint8)
    for k in (np.ones(n, dtype=np.uint8), keep):
        a, b = (_backend.cell_links(cc.sorted_pts, cc.bounds, cc.pairs, k, delta, impl=m) for m in IMPLS)
        assert np.array_equal(a, b)


def test_backend_is_reported():
    assert _backend.BACKEND in ("compiled", "python")
