"""Kernel selection: compiled extension when importable, Python fallback otherwise.

Set ``CDIMLAB_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if not os.environ.get("CDIMLAB_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py


def greedy_net(pts, eps, impl=None):
    mod = impl or _impl
    return mod.greedy_net(np.ascontiguousarray(pts, dtype=np.float64), float(eps))


def vertex_dijkstra(adjacency, weights, sources, impl=None):
    """``adjacency`` is a scipy CSR matrix; ``sources`` a boolean mask."""
    mod = impl or _impl
    return mod.vertex_dijkstra(
        np.ascontiguousarray(adjacency.indptr, dtype=np.intc),
        np.ascontiguousarray(adjacency.indices, dtype=np.intc),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(sources, dtype=np.uint8),
    )


def cell_links(pts, bounds, pairs, keep, delta, impl=None):
    """Close-pair flags for cell pairs; see ``_kernels.cell_links``."""
    mod = impl or _impl
    return mod.cell_links(
        np.ascontiguousarray(pts, dtype=np.float64),
        np.ascontiguousarray(bounds, dtype=np.int64),
        np.ascontiguousarray(pairs, dtype=np.int64).reshape(-1, 2),
        np.ascontiguousarray(keep, dtype=np.uint8),
        float(delta),
    ).astype(bool)
