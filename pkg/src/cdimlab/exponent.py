"""Tables of max annulus moduli M_p(k) and a bracket for the critical exponent.

M_p(k) is approximated by the maximum of mod_p(Gamma_k(x)) over m in a finite grid and
stride-sampled centers x of the net P_m. That under-estimates the supremum, so brackets are
evidence tied to the grids, never a limit value.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointCloud
from .modulus import LAMBDA_RIGOROUS, ModulusNotConverged, annulus_family, modulus_p
from .nets import check_fidelity, extract_net
from .svg import line_chart


class CellNotConverged(ModulusNotConverged):
    """Solver failure tagged with the grid cell it came from."""

    def __init__(self, err: ModulusNotConverged, m, k, x_index, p):
        RuntimeError.__init__(self, f"m={m} k={k} x_index={x_index} p={p:g}: {err}")
        self.lower, self.upper, self.iterations = err.lower, err.upper, err.iterations
        self.cell = {"m": m, "k": k, "x_index": x_index, "p": p}


@dataclass
class ExponentTable:
    a: float
    lam: float
    p_grid: list
    k_grid: list
    m_grid: list
    center_stride: int
    # (p, k) -> {"value", "argmax_m", "argmax_x_index", "n_cells", "n_nonempty"}
    entries: dict = field(default_factory=dict)

    @property
    def heuristic(self):
        return self.lam < LAMBDA_RIGOROUS

    def value(self, p, k):
        return self.entries[(p, k)]["value"]

    def row(self, p):
        return [self.entries[(p, k)]["value"] for k in self.k_grid]

    def all_zero(self):
        return all(e["value"] == 0 for e in self.entries.values())

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["p", "k", "value", "argmax_m", "argmax_x_index"])
            for p in self.p_grid:
                for k in self.k_grid:
                    e = self.entries[(p, k)]
                    w.writerow([repr(p), k, repr(e["value"]), e["argmax_m"], e["argmax_x_index"]])

    def to_dict(self):
        return {
            "a": self.a,
            "lam": self.lam,
            "heuristic": self.heuristic,
            "p_grid": self.p_grid,
            "k_grid": self.k_grid,
            "m_grid": self.m_grid,
            "center_stride": self.center_stride,
            "entries": [{"p": p, "k": k, **self.entries[(p, k)]} for p in self.p_grid for k in self.k_grid],
        }


def _level_cells(cloud, a, lam, m, k, centers, p_grid):
    """All (x_index, p, value, empty) for one (m, k); the level-(m+k) net is shared."""
    net = extract_net(cloud, float(a) ** (-(m + k)))
    out = []
    for xi in centers:
        fam = annulus_family(cloud, a, lam, cloud.points[xi], m, k, net=net)
        empty = fam.is_empty()
        for p in p_grid:
            if empty:
                out.append((xi, p, 0.0, True))
                continue
            try:
                out.append((xi, p, modulus_p(fam, p).value, False))
            except ModulusNotConverged as err:
                raise CellNotConverged(err, m, k, xi, p) from None
    return m, k, out


def centers_for(cloud: PointCloud, a: float, m: int, stride: int):
    """Cloud indices of every ``stride``-th point of the net P_m."""
    return [int(i) for i in extract_net(cloud, float(a) ** (-m)).members[::max(1, int(stride))]]


def build_table(cloud: PointCloud, a: float, lam: float, p_grid, k_grid, m_grid,
                center_stride: int = 1, workers: int = 1) -> ExponentTable:
    """Max of mod_p(Gamma_k(x)) over m in m_grid and x in P_m (stride-sampled).

    Empty families contribute 0. Ties keep the first cell in (m, x_index) order, so the
    result does not depend on the order in which workers finish.
    """
    if a <= 1:
        raise ValueError("a must exceed 1")
    p_grid = sorted(float(p) for p in p_grid)
    k_grid = sorted(int(k) for k in k_grid)
    m_grid = sorted(int(m) for m in m_grid)
    check_fidelity(float(a) ** (-(m_grid[-1] + k_grid[-1])), cloud, "finest level scale")
    centers = {m: centers_for(cloud, a, m, center_stride) for m in m_grid}
    jobs = [(m, k) for m in m_grid for k in k_grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_level_cells, cloud, a, lam, m, k, centers[m], p_grid) for m, k in jobs]
            results = [f.result() for f in futs]
    else:
        results = [_level_cells(cloud, a, lam, m, k, centers[m], p_grid) for m, k in jobs]

    table = ExponentTable(float(a), float(lam), p_grid, k_grid, m_grid, int(center_stride))
    for p in p_grid:
        for k in k_grid:
            table.entries[(p, k)] = {"value": 0.0, "argmax_m": None, "argmax_x_index": None,
                                     "n_cells": 0, "n_nonempty": 0}
    for m, k, cells in sorted(results, key=lambda r: (r[0], r[1])):
        for xi, p, value, empty in sorted(cells, key=lambda c: (c[0], c[1])):
            e = table.entries[(p, k)]
            e["n_cells"] += 1
            e["n_nonempty"] += not empty
            if e["argmax_m"] is None or value > e["value"]:
                e.update(value=value, argmax_m=m, argmax_x_index=xi)
    return table


@dataclass
class ExponentEstimate:
    theta: float
    p_grid: list
    k_range: list
    slopes: dict
    verdicts: dict
    bracket: list
    disorder: bool
    all_zero: bool

    def to_dict(self):
        return {
            "theta": self.theta,
            "k_range": self.k_range,
            "p_grid": self.p_grid,
            "per_p": [
                {"p": p, "slope": self.slopes[p], "verdict": self.verdicts[p]} for p in self.p_grid
            ],
            "QN_bracket": self.bracket,
            "disorder": self.disorder,
            "all_zero": self.all_zero,
        }


def fit_slope(ks, values):
    """Least-squares slope of log(value) against k."""
    ks = np.asarray(ks, dtype=np.float64)
    y = np.log(np.asarray(values, dtype=np.float64))
    kc = ks - ks.mean()
    return float(np.dot(kc, y - y.mean()) / np.dot(kc, kc))


def estimate_QN(table: ExponentTable, theta: float | None = None) -> ExponentEstimate:
    """Per-p decay verdicts and a bracket [p_lo, p_hi] for the critical exponent.

    A row containing a zero decays outright. Otherwise the slope of log value in k decides:
    <= -theta decays, >= theta grows, anything between is flat. p_hi = None means no p on the
    grid decays.
    """
    if len(table.k_grid) < 3:
        raise ValueError("need at least 3 k values per p")
    if theta is None:
        theta = 0.5 * math.log(table.a)
    ps = list(table.p_grid)
    slopes, verdicts = {}, {}
    for p in ps:
        row = table.row(p)
        if min(row) <= 0:
            slopes[p], verdicts[p] = None, "decays"
            continue
        s = fit_slope(table.k_grid, row)
        slopes[p] = s
        verdicts[p] = "decays" if s <= -theta else "grows" if s >= theta else "flat"

    all_zero = table.all_zero()
    decaying = [i for i, p in enumerate(ps) if verdicts[p] == "decays"]
    other = [i for i, p in enumerate(ps) if verdicts[p] != "decays"]
    disorder = False
    if all_zero or not other:
        bracket = [0.0, ps[0]]
    elif not decaying:
        bracket = [ps[-1], None]
    else:
        i0, i1 = decaying[0], other[-1]
        if i1 < i0:
            bracket = [ps[i1], ps[i0]]
        else:
            disorder = True
            bracket = [ps[i0 - 1] if i0 > 0 else 0.0, ps[i1 + 1] if i1 + 1 < len(ps) else None]
    return ExponentEstimate(float(theta), ps, [table.k_grid[0], table.k_grid[-1]], slopes, verdicts,
                            bracket, disorder, all_zero)


def chart(table: ExponentTable, path):
    series = [(f"p={p:g}", table.k_grid, [math.log(v) if v > 0 else math.nan for v in table.row(p)])
              for p in table.p_grid]
    line_chart(series, path, xlabel="k", ylabel="log max modulus")
