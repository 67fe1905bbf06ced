import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mobile_gossip.errors import InvalidParameterError
from mobile_gossip.geometry import (CutSet, SpatialIndex, WorldConfig, build_index,
                                    crossing_edges, default_radius, distance, is_connected,
                                    neighbors)

from conftest import pairs_by_loops


def index_pairs(index):
    return {tuple(p) for p in index.pairs.tolist()}


def test_distance_identity_and_axis():
    assert distance((0, 0), (0, 0)) == 0
    assert distance((0.05, 0.5), (0.95, 0.5)) == pytest.approx(0.9)
    assert distance((0.05, 0.5), (0.95, 0.5), "torus") == pytest.approx(0.1)


def test_distance_rejects_unknown_boundary():
    with pytest.raises(InvalidParameterError):
        distance((0, 0), (1, 1), "sphere")


def test_default_radius_direct_evaluation():
    assert default_radius(1000) == pytest.approx(math.sqrt(8 * math.log(1000) / (1000 * math.pi)))
    assert default_radius(1000) == pytest.approx(0.13258, rel=5e-4)


def test_world_config_defaults_and_validation():
    w = WorldConfig(1000)
    assert w.r == default_radius(1000) and w.boundary == "square"
    assert w.contact_probability == pytest.approx(1 / (1000 * math.pi * w.r ** 2))
    for bad in (dict(n=1), dict(n=10, r=0.0), dict(n=10, r=-1.0), dict(n=10, r=2.0),
                dict(n=10, boundary="klein")):
        with pytest.raises(InvalidParameterError):
            WorldConfig(**bad)


def test_three_node_example():
    idx = SpatialIndex([(0.1, 0.1), (0.15, 0.1), (0.9, 0.9)], 0.1)
    assert neighbors(idx, 0) == {1}
    assert neighbors(idx, 2) == set()


def test_single_node_index():
    idx = SpatialIndex([(0.5, 0.5)], 0.1)
    assert idx.edge_count == 0 and neighbors(idx, 0) == set()
    assert is_connected(idx)


def test_coincident_nodes_are_neighbors():
    idx = SpatialIndex([(0.3, 0.3), (0.3, 0.3)], 1e-9)
    assert neighbors(idx, 0) == {1} and neighbors(idx, 1) == {0}


def test_neighbors_out_of_range():
    idx = SpatialIndex([(0.3, 0.3), (0.4, 0.3)], 0.2)
    for bad in (-1, 2):
        with pytest.raises(InvalidParameterError):
            idx.neighbors(bad)


def test_index_rejects_bad_radius():
    with pytest.raises(InvalidParameterError):
        SpatialIndex([(0.1, 0.1)], 0.0)


@pytest.mark.parametrize("boundary", ["square", "torus"])
def test_random_200_matches_loop_oracle(rng, boundary):
    pos = rng.random((200, 2))
    idx = build_index(pos, 0.2, boundary)
    expected = pairs_by_loops(pos, 0.2, boundary == "torus")
    assert index_pairs(idx) == expected
    for i in range(200):
        nb = {j for a, b in expected for j in ((b,) if a == i else (a,) if b == i else ())}
        assert neighbors(idx, i) == nb


@pytest.mark.parametrize("boundary", ["square", "torus"])
def test_grid_path_matches_oracle_at_small_radius(rng, boundary):
    pos = rng.random((400, 2))
    idx = SpatialIndex(pos, 0.07, boundary)
    assert idx.cells_per_side >= 3
    assert index_pairs(idx) == pairs_by_loops(pos, 0.07, boundary == "torus")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 60), st.floats(0.02, 0.8),
       st.sampled_from(["square", "torus"]))
def test_index_property_matches_oracle(seed, n, r, boundary):
    pos = np.random.default_rng(seed).random((n, 2))
    idx = SpatialIndex(pos, r, boundary)
    assert index_pairs(idx) == pairs_by_loops(pos, r, boundary == "torus")
    assert idx.degree.sum() == 2 * idx.edge_count
    for i in range(n):
        for j in idx.neighbors(i):
            assert i in idx.neighbors(j)


def test_contact_matrix_rows(rng):
    idx = SpatialIndex(rng.random((100, 2)), 0.1)
    w = idx.contact_matrix().toarray()
    sums = w.sum(axis=1)
    assert np.allclose(sums[idx.degree > 0], 1.0)
    assert np.all(sums[idx.degree == 0] == 0)


def test_crossing_edges_examples():
    idx = SpatialIndex([(0.1, 0.1), (0.15, 0.1)], 0.1)
    assert crossing_edges(idx, CutSet.from_ids(2, [0])) == 1
    far = SpatialIndex([(0.0, 0.0), (0.01, 0.0), (1.0, 1.0), (0.99, 1.0)], 0.1)
    assert crossing_edges(far, CutSet.from_ids(4, [0, 1])) == 0
    with pytest.raises(InvalidParameterError):
        crossing_edges(far, CutSet.from_ids(4, []))
    with pytest.raises(InvalidParameterError):
        crossing_edges(far, CutSet.from_ids(4, range(4)))


def test_crossing_edges_random_oracle(rng):
    pos = rng.random((100, 2))
    idx = SpatialIndex(pos, 0.15)
    cut = CutSet.from_ids(100, rng.choice(100, 50, replace=False))
    expected = sum(1 for i, j in pairs_by_loops(pos, 0.15) if cut.members[i] != cut.members[j])
    assert crossing_edges(idx, cut) == expected


def test_connectivity_examples(rng):
    clusters = np.vstack((0.1 + 0.01 * rng.random((5, 2)), 0.9 - 0.01 * rng.random((5, 2))))
    assert not is_connected(SpatialIndex(clusters, 0.2))
    assert is_connected(SpatialIndex(clusters, 1.2))


def test_connectivity_frequency_at_default_radius():
    n = 500
    hits = sum(is_connected(SpatialIndex(np.random.default_rng(s).random((n, 2)),
                                         default_radius(n))) for s in range(100))
    assert hits / 100 >= 0.99


def test_cutset_basics():
    c = CutSet.from_ids(6, [0, 2])
    assert c.size == 2 and c.is_valid_bottleneck_cut()
    assert c.complement().size == 4 and not c.complement().is_valid_bottleneck_cut()
    assert c == CutSet.from_ids(6, [2, 0]) and hash(c) == hash(CutSet.from_ids(6, [2, 0]))
    assert not CutSet.from_ids(6, []).is_valid_bottleneck_cut()
    with pytest.raises(InvalidParameterError):
        CutSet.from_ids(3, [3])
