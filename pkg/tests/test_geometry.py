import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cdimlab.geometry import (KINDS, PointCloud, ResourceLimitError, ShapeSpec, cantor_intervals, distance,
                              gen_shape, koch_chain, quasi_tree_segments, read_cloud, spoke_segments,
                              spoked_curve_chain, write_cloud)


def max_gap(pts):
    return float(np.hypot(*np.diff(pts, axis=0).T).max())


@pytest.mark.parametrize("kind,params", [("segment", {}), ("square_boundary", {}), ("koch", {"level": 3}),
                                         ("cantor", {"level": 3}), ("quasi_tree", {"depth": 3}),
                                         ("spoked_curve", {"a": 10, "kmax": 2}), ("circle", {})])
def test_generation_is_deterministic(kind, params):
    spec = ShapeSpec(kind, params, 2e-3)
    a, b = gen_shape(spec), gen_shape(spec)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.label == b.label


def test_every_kind_is_covered():
    assert set(KINDS) == {"segment", "circle", "square_boundary", "koch", "cantor", "quasi_tree", "spoked_curve"}


def test_segment_samples_respect_spacing():
    cloud = gen_shape(ShapeSpec("segment", {}, 1e-2))
    assert max_gap(cloud.points) <= 1e-2 * (1 + 1e-12)
    assert cloud.points[0].tolist() == [0.0, 0.0]
    assert cloud.points[-1].tolist() == [1.0, 0.0]
    assert not cloud.disconnected_by_design


def test_circle_points_lie_on_unit_circle():
    cloud = gen_shape(ShapeSpec("circle", {}, 1e-2))
    assert np.allclose(np.hypot(*cloud.points.T), 1.0, atol=1e-15)
    assert len(cloud) == math.ceil(2 * math.pi / 1e-2)
    assert cloud.spacing <= 1e-2


def test_window_selects_exactly_the_closed_ball():
    spec = ShapeSpec("circle", {}, 1e-3)
    full = gen_shape(spec)
    c, R = np.array([1.0, 0.0]), 0.05
    win = gen_shape(spec, window=(c, R))
    inside = full.points[np.hypot(*(full.points - c).T) <= R]
    assert sorted(map(tuple, win.points)) == sorted(map(tuple, inside))
    assert win.window == ((1.0, 0.0), 0.05)


def test_polyline_window_matches_crop():
    spec = ShapeSpec("koch", {"level": 3}, 1e-3)
    c, R = np.array([0.5, 0.2]), 0.1
    win = gen_shape(spec, window=(c, R))
    crop = gen_shape(spec).crop(c, R, closed=True)
    assert np.array_equal(win.points, crop.points)


def test_cantor_is_disconnected_by_design():
    cloud = gen_shape(ShapeSpec("cantor", {"level": 2}, 1e-3))
    assert cloud.disconnected_by_design
    ivs = cantor_intervals(2, 1 / 3)
    assert np.allclose(ivs, [(0, 1 / 9), (2 / 9, 1 / 3), (2 / 3, 7 / 9), (8 / 9, 1)], rtol=0, atol=1e-15)


def test_koch_chain_vertex_count_and_endpoints():
    ch = koch_chain(3)
    assert len(ch) == 4 ** 3 + 1
    assert ch[0].tolist() == [0, 0] and ch[-1].tolist() == pytest.approx([1, 0])
    assert np.allclose(np.hypot(*np.diff(ch, axis=0).T), 3.0 ** -3)


def test_quasi_tree_segment_lengths_halve():
    segs = quasi_tree_segments(3, math.pi / 2)
    assert len(segs) == 1 + 2 + 4 + 8
    for base, tip, level in segs:
        assert math.dist(base, tip) == pytest.approx(0.5 * 2.0 ** -level)


def test_spoked_curve_contains_the_spokes():
    a, k = 10, 3
    cloud = gen_shape(ShapeSpec("spoked_curve", {"a": a, "kmax": k}, 2e-5))
    chain = spoked_curve_chain(a, k)
    for inner, outer in spoke_segments(a, k):
        for end in (inner, outer):
            assert np.min(np.hypot(*(chain - end).T)) < 1e-15
        mid = (inner + outer) / 2
        assert cloud.tree.query(mid)[0] <= 2e-5
    assert len(spoke_segments(a, k)) == 2 * k


def test_spoked_curve_rejects_unresolvable_spacing():
    with pytest.raises(ValueError, match="cannot resolve"):
        ShapeSpec("spoked_curve", {"a": 10, "kmax": 3}, 1e-3)
    with pytest.raises(ValueError):
        ShapeSpec("spoked_curve", {"a": 5, "kmax": 1}, 1e-4)


@pytest.mark.parametrize("bad", [
    lambda: ShapeSpec("hexagon"),
    lambda: ShapeSpec("segment", {}, 0.0),
    lambda: ShapeSpec("segment", {}, float("nan")),
    lambda: ShapeSpec("cantor", {"ratio": 1.0}),
    lambda: ShapeSpec("koch", {"level": -1}),
    lambda: PointCloud(np.zeros((0, 2)), 1.0),
    lambda: PointCloud(np.array([[0.0, np.inf]]), 1.0),
    lambda: PointCloud(np.zeros((2, 2)), 1.0, metric="taxicab"),
])
def test_invalid_inputs_are_rejected(bad):
    with pytest.raises(ValueError):
        bad()


def test_oversized_generation_raises_resource_limit():
    with pytest.raises(ResourceLimitError):
        gen_shape(ShapeSpec("segment", {}, 1e-9))


def test_distance_is_euclidean_and_bounds_checked():
    cloud = PointCloud(np.array([[0.0, 0.0], [3.0, 4.0]]), 1.0)
    assert distance(cloud, 0, 1) == 5.0
    with pytest.raises(IndexError):
        distance(cloud, 0, 2)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-10, 10)), min_size=1, max_size=40))
def test_diameter_matches_all_pairs(pts):
    pts = np.array(pts)
    cloud = PointCloud(pts, 1.0)
    brute = float(np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)).max())
    assert cloud.diameter() == pytest.approx(brute, rel=1e-12, abs=1e-12)


def test_crop_tracks_parent_indices():
    cloud = gen_shape(ShapeSpec("segment", {}, 0.1))
    sub = cloud.crop((0.5, 0.0), 0.25)
    assert np.array_equal(cloud.points[sub.parent_index], sub.points)
    subsub = sub.crop((0.5, 0.0), 0.15)
    assert np.array_equal(cloud.points[subsub.parent_index], subsub.points)
    with pytest.raises(ValueError):
        cloud.crop((5.0, 5.0), 0.1)


def test_cloud_roundtrip(tmp_path):
    cloud = gen_shape(ShapeSpec("koch", {"level": 2}, 1e-2), window=((0.5, 0.1), 0.3))
    write_cloud(cloud, tmp_path / "c.csv", tmp_path / "c.json")
    back = read_cloud(tmp_path / "c.csv", tmp_path / "c.json")
    assert np.array_equal(back.points, cloud.points)
    assert back.spacing == cloud.spacing
    assert back.spec == cloud.spec
