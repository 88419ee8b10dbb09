import math

import pytest

from cdimlab.exponent import ExponentTable, build_table, centers_for, estimate_QN, fit_slope
from cdimlab.geometry import ShapeSpec, gen_shape


def synthetic(rows, a=4.0, ks=(2, 3, 4, 5)):
    """Table whose row for p is ``rows[p](k)``."""
    t = ExponentTable(a, 32.0, sorted(rows), list(ks), [1], 1)
    for p, f in rows.items():
        for k in ks:
            t.entries[(p, k)] = {"value": f(k), "argmax_m": 1, "argmax_x_index": 0, "n_cells": 1,
                                 "n_nonempty": int(f(k) > 0)}
    return t


def test_fit_slope_is_exact_on_geometric_rows():
    assert fit_slope([1, 2, 3, 4], [math.exp(-0.7 * k) for k in range(1, 5)]) == pytest.approx(-0.7)


def test_bracket_between_flat_and_decaying():
    a = 4.0
    t = synthetic({1.0: lambda k: 5.0, 1.5: lambda k: 2.0 * a ** (0.1 * k), 2.0: lambda k: a ** -k,
                   3.0: lambda k: a ** (-2 * k)}, a)
    est = estimate_QN(t)
    assert est.theta == pytest.approx(0.5 * math.log(a))
    assert est.verdicts == {1.0: "flat", 1.5: "flat", 2.0: "decays", 3.0: "decays"}
    assert est.bracket == [1.5, 2.0] and not est.disorder


def test_growing_rows_and_open_bracket():
    t = synthetic({1.0: lambda k: 4.0 ** k, 2.0: lambda k: 1.0})
    est = estimate_QN(t)
    assert est.verdicts[1.0] == "grows"
    assert est.bracket == [2.0, None]


def test_zero_rows_decay_and_all_zero_brackets_at_zero():
    t = synthetic({1.0: lambda k: 0.0, 2.0: lambda k: 0.0})
    est = estimate_QN(t)
    assert est.all_zero and est.bracket == [0.0, 1.0]
    t = synthetic({1.0: lambda k: 1.0 if k < 4 else 0.0, 2.0: lambda k: 0.0})
    assert estimate_QN(t).verdicts[1.0] == "decays"


def test_disorder_widens_the_bracket():
    t = synthetic({1.0: lambda k: 1.0, 1.5: lambda k: 4.0 ** -k, 2.0: lambda k: 1.0, 3.0: lambda k: 4.0 ** -k})
    est = estimate_QN(t)
    assert est.disorder
    assert est.bracket == [1.0, 3.0]


def test_needs_three_k_values():
    with pytest.raises(ValueError):
        estimate_QN(synthetic({1.0: lambda k: 1.0}, ks=(2, 3)))


@pytest.fixture(scope="module")
def segment():
    return gen_shape(ShapeSpec("segment", {}, 2e-5))


def test_build_table_on_segment(segment, tmp_path):
    t = build_table(segment, 4, 2.0, [2.0, 1.0], [1, 2, 3], [1])
    assert t.heuristic and t.p_grid == [1.0, 2.0]
    n_centers = len(centers_for(segment, 4, 1, 1))
    for k in t.k_grid:
        assert t.value(2.0, k) <= t.value(1.0, k)
        assert t.entries[(1.0, k)]["n_cells"] == n_centers
    t.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "p,k,value,argmax_m,argmax_x_index" and len(lines) == 1 + 6
    # no center of P_1 sees the unit segment cross on both sides; one arc needs 2*lam - 1 cut points
    assert [t.value(1.0, k) for k in t.k_grid] == [3.0, 3.0, 3.0]


def test_workers_do_not_change_the_table(segment):
    one = build_table(segment, 4, 2.0, [1.5], [1, 2], [1, 2], center_stride=2)
    two = build_table(segment, 4, 2.0, [1.5], [1, 2], [1, 2], center_stride=2, workers=2)
    assert one.to_dict() == two.to_dict()


def test_build_table_checks_fidelity(segment):
    with pytest.raises(ValueError, match="fidelity"):
        build_table(segment, 4, 2.0, [1.0], [4, 5, 6], [2])
