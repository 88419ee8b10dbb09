import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import connected_components

from cdimlab.geometry import PointCloud, ShapeSpec, gen_shape
from cdimlab.nets import (FIDELITY, CellComponents, discrete_path_search, doubling_estimate, extract_net,
                          linear_connectivity_probe, proximity_components, proximity_graph, sample_pairs,
                          stride_centers, uniformly_disconnected_probe, uniformly_perfect_probe)

coords = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=60)


def brute_labels(pts, delta, keep=None):
    """All-pairs distance matrix + csgraph components, relabelled by first appearance."""
    keep = np.ones(len(pts), dtype=bool) if keep is None else keep
    idx = np.flatnonzero(keep)
    sub = pts[idx]
    d = np.sqrt(((sub[:, None] - sub[None]) ** 2).sum(-1))
    _, lab = connected_components(d <= delta, directed=False)
    out = np.full(len(pts), -1)
    seen = {}
    for i, l in zip(idx, lab):
        out[i] = seen.setdefault(l, len(seen))
    return len(seen), out


@settings(max_examples=80, deadline=None)
@given(coords, st.floats(0.01, 0.5))
def test_greedy_net_is_separated_and_covering(pts, eps):
    cloud = PointCloud(np.array(pts), 1e-6)
    net = extract_net(cloud, eps, check=False)
    assert net.min_separation() >= eps
    assert net.covering_radius() < eps
    assert net.members[0] == 0


def test_net_respects_fidelity():
    cloud = gen_shape(ShapeSpec("segment", {}, 1e-3))
    with pytest.raises(ValueError, match="fidelity"):
        extract_net(cloud, 5e-3)
    assert len(extract_net(cloud, FIDELITY * 1e-3)) > 0


@settings(max_examples=120, deadline=None)
@given(coords, st.floats(0.02, 0.4))
def test_cell_components_match_brute_force(pts, delta):
    pts = np.array(pts)
    count, lab = proximity_components(pts, delta)
    bcount, blab = brute_labels(pts, delta)
    assert count == bcount
    assert np.array_equal(lab, blab)


@settings(max_examples=120, deadline=None)
@given(coords, st.floats(0.02, 0.4), st.data())
def test_cell_components_with_removals(pts, delta, data):
    pts = np.array(pts)
    keep = np.array(data.draw(st.lists(st.booleans(), min_size=len(pts), max_size=len(pts))))
    cc = CellComponents(pts, delta)
    count, lab = cc.labels(keep)
    bcount, blab = brute_labels(pts, delta, keep)
    assert count == bcount
    assert np.array_equal(lab, blab)
    # the cached full labelling is unaffected by a masked query
    assert np.array_equal(cc.labels()[1], brute_labels(pts, delta)[1])


def test_threshold_is_inclusive():
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]])
    assert proximity_components(pts, 0.5)[0] == 1
    assert proximity_components(pts, 0.5 - 1e-12)[0] == 3
    assert proximity_graph(pts, 0.5, strict=True).nnz == 0
    assert proximity_graph(pts, 0.5).nnz == 4


def test_coincident_points_are_adjacent():
    pts = np.array([[0.2, 0.2], [0.2, 0.2], [0.9, 0.9]])
    assert proximity_graph(pts, 0.1).nnz == 2
    assert proximity_components(pts, 0.1)[0] == 2


def test_discrete_path_is_valid_and_hop_minimal():
    cloud = gen_shape(ShapeSpec("segment", {}, 0.01))
    path = discrete_path_search(cloud, 0, len(cloud) - 1, 0.105)
    steps = np.hypot(*np.diff(cloud.points[path.vertices], axis=0).T)
    assert np.all(steps <= 0.105)
    assert len(path.vertices) - 1 == 10
    # inside B(0.5, 0.5) the path exists; a ball excluding an endpoint is an input error
    assert discrete_path_search(cloud, 0, len(cloud) - 1, 0.105, confine=((0.5, 0.0), 0.5)) is not None
    with pytest.raises(ValueError):
        discrete_path_search(cloud, 0, len(cloud) - 1, 0.105, confine=((0.0, 0.0), 0.5))


def test_no_path_across_cantor_gap():
    cloud = gen_shape(ShapeSpec("cantor", {"level": 1}, 0.01))
    right = int(np.argmax(cloud.points[:, 0]))
    assert discrete_path_search(cloud, 0, right, 0.3) is None
    assert discrete_path_search(cloud, 0, right, 0.34) is not None


def test_sample_pairs_are_distinct_and_deterministic():
    pairs = sample_pairs(97, 300)
    assert pairs == sample_pairs(97, 300)
    assert all(i != j and 0 <= i < 97 and 0 <= j < 97 for i, j in pairs)
    assert sample_pairs(1, 5) == []


def test_stride_centers():
    assert stride_centers(10, 5) == [0, 2, 4, 6, 8]
    assert stride_centers(3, 10) == [0, 1, 2]


def test_disconnect_probe_separates_cantor_from_circle():
    cantor = gen_shape(ShapeSpec("cantor", {"level": 5}, 2e-4))
    res = uniformly_disconnected_probe(cantor, 0.25, n_pairs=60)
    assert res.holds and res.details["n_checked"] > 0
    circle = gen_shape(ShapeSpec("circle", {}, 1e-3))
    res = uniformly_disconnected_probe(circle, 0.25, n_pairs=20)
    assert res.verdict == "fails"
    i, j = res.witness["pair"]
    assert res.witness["path"][0] == i and res.witness["path"][-1] == j


def test_perfect_probe():
    assert uniformly_perfect_probe(gen_shape(ShapeSpec("segment", {}, 1e-3)), 0.4).holds
    two = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]]), 1e-3)
    assert uniformly_perfect_probe(two, 0.5, queries=[(0, 0.1)]).verdict == "fails"


def test_linear_connectivity_probe():
    cloud = gen_shape(ShapeSpec("circle", {}, 1e-3))
    n = len(cloud)
    ls = linear_connectivity_probe(cloud, [(0, n // 4), (0, n // 2)], [1, 2, 4])
    assert ls == [1.0, 1.0]
    with pytest.raises(ValueError):
        linear_connectivity_probe(cloud, [], [2, 1])


def test_doubling_of_segment_is_small():
    cloud = gen_shape(ShapeSpec("segment", {}, 1e-4))
    assert 2 <= doubling_estimate(cloud, [0.01, 0.1]) <= 4


def test_cell_components_handle_large_spread():
    # coordinates far from the origin must not overflow the cell keys
    pts = np.array([[1e6, 1e6], [1e6 + 0.5, 1e6], [1e6 + 2, 1e6]])
    assert proximity_components(pts, 0.6)[1].tolist() == [0, 0, 1]
