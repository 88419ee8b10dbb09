import json

import numpy as np
import pytest

from cdimlab.geometry import ShapeSpec, gen_shape
from cdimlab.nets import stride_centers
from cdimlab.tangent import (EPS_FIDELITY, RESOLUTION, lambda_grid, rescaled_window, tangent_sweep,
                             window_component_count, write_sweep)


@pytest.fixture(scope="module")
def circle():
    return gen_shape(ShapeSpec("circle", {}, 1e-4))


def test_window_is_rescaled_ball(circle):
    x = circle.points[0]
    w = rescaled_window(circle, x, 0.05, 1.0, 0)
    assert np.all(np.hypot(*w.points.T) <= 1.0)
    assert w.spacing == pytest.approx(circle.spacing / 0.05)
    d = np.hypot(*(circle.points - x).T)
    assert len(w) == int(np.sum(d <= 0.05))
    assert w.meta()["n_points"] == len(w)


def test_circle_windows_are_connected(circle):
    rows = tangent_sweep(circle, stride_centers(len(circle), 4), [0.1, 0.05], [0.05])
    assert [r.count for r in rows] == [1] * 8


def test_cantor_window_splits():
    cantor = gen_shape(ShapeSpec("cantor", {"level": 4}, 1e-4))
    w = rescaled_window(cantor, (0.0, 0.0), 1 / 3, 1.0)
    # the window is the level-1 piece [0, 1/3] blown up by 3: level-j gaps become 3^(1-j)
    assert window_component_count(w, 0.05) == 4
    assert window_component_count(w, 0.2) == 2
    assert window_component_count(w, 0.34) == 1


def test_guards(circle):
    with pytest.raises(ValueError, match="rescaled spacing"):
        rescaled_window(circle, circle.points[0], circle.spacing * RESOLUTION / 2, 1.0)
    with pytest.raises(ValueError, match="diameter"):
        rescaled_window(circle, circle.points[0], 3.0, 1.0)
    w = rescaled_window(circle, circle.points[0], 0.05, 1.0)
    with pytest.raises(ValueError):
        window_component_count(w, EPS_FIDELITY * w.spacing / 2)


def test_lambda_grid_respects_guards(circle):
    lams = lambda_grid(circle, 1.0, 0.05)
    assert lams and lams == sorted(lams, reverse=True)
    for lam in lams:
        s = circle.spacing / lam
        assert s <= 1.0 / RESOLUTION and 0.05 >= EPS_FIDELITY * s
    finer = lams[-1] / 2
    assert circle.spacing / finer > 1.0 / RESOLUTION or 0.05 < EPS_FIDELITY * circle.spacing / finer


def test_artifacts(tmp_path, circle):
    w = rescaled_window(circle, circle.points[5], 0.1, 1.0, 5)
    w.write(tmp_path / "w.csv", tmp_path / "w.json")
    back = np.loadtxt(tmp_path / "w.csv", delimiter=",", skiprows=1)
    assert np.array_equal(back, w.points)
    assert json.loads((tmp_path / "w.json").read_text())["center_index"] == 5
    rows = tangent_sweep(circle, [0], [0.1], [0.05, 0.1])
    write_sweep(rows, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "center_index,lambda,eps,count"
