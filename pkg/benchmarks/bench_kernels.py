"""Compiled vs pure-Python kernels on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is run on identical inputs by both implementations; outputs are checked equal.
"""

import argparse
import time

import numpy as np

from cdimlab import _backend, _kernels_py
from cdimlab.geometry import ShapeSpec, gen_shape
from cdimlab.modulus import build_level_graph
from cdimlab.nets import CellComponents

try:
    from cdimlab import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def cases():
    koch = gen_shape(ShapeSpec("koch", {"level": 6}, 2e-4))
    yield "greedy_net koch n=%d" % len(koch), lambda m: _backend.greedy_net(koch.points, 5e-3, impl=m)

    g = build_level_graph(gen_shape(ShapeSpec("circle", {}, 5e-5)), 4, 4.0, 5)
    rho = np.random.default_rng(1).random(g.n)
    src = np.zeros(g.n, dtype=bool)
    src[0] = True
    yield ("vertex_dijkstra circle n=%d e=%d" % (g.n, g.n_edges),
           lambda m: _backend.vertex_dijkstra(g.adjacency, rho, src, impl=m))

    qt = gen_shape(ShapeSpec("quasi_tree", {"depth": 6}, 4e-5))
    cc = CellComponents(qt.points, 4e-3)
    keep = np.ones(len(qt), dtype=np.uint8)
    yield ("cell_links quasi_tree n=%d pairs=%d" % (len(qt), len(cc.pairs)),
           lambda m: _backend.cell_links(cc.sorted_pts, cc.bounds, cc.pairs, keep, 4e-3, impl=m))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the Python fallback is available")
    print(f"{'kernel':48s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s}")
    for name, fn in cases():
        tp, outp = best_of(lambda: fn(_kernels_py), args.repeat)
        if compiled is None:
            print(f"{name:48s} {tp:10.4f} {'-':>11s} {'-':>8s}")
            continue
        tc, outc = best_of(lambda: fn(compiled), args.repeat)
        if not same(outp, outc):
            raise SystemExit(f"{name}: implementations disagree")
        print(f"{name:48s} {tp:10.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
