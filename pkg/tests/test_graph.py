import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings

from classcontrast.errors import ClassContrastWarning, DataError
from classcontrast.graph import (Direction, Graph, NodeTable, Role, k_hop_neighborhood,
                                 neighborhood_matrix, stratified_split)

from conftest import graphs, random_graph


def bfs_oracle(g, u, k, direction):
    """Depth-limited BFS via networkx, independent of the package code."""
    src, dst, _ = g.edges()
    if direction == Direction.ANY or not g.directed:
        h = nx.Graph()
    else:
        h = nx.DiGraph()
    h.add_nodes_from(range(g.node_count))
    if direction == Direction.INCOMING and g.directed:
        h.add_edges_from(zip(dst.tolist(), src.tolist()))
    else:
        h.add_edges_from(zip(src.tolist(), dst.tolist()))
    lengths = nx.single_source_shortest_path_length(h, u, cutoff=k)
    return {v for v in lengths if v != u}


def test_path_graph_two_hops():
    g = Graph.from_edges(3, [0, 1], [1, 2], directed=False)
    assert k_hop_neighborhood(g, 0, 2) == {1, 2}
    assert k_hop_neighborhood(g, 0, 2, exact=True) == {2}


def test_isolated_node_has_empty_neighborhood():
    g = Graph.from_edges(4, [0], [1], directed=True)
    for k in (1, 2, 3):
        assert k_hop_neighborhood(g, 3, k) == set()


def test_invalid_node_and_hops():
    g = Graph.from_edges(3, [0], [1])
    with pytest.raises(ValueError):
        k_hop_neighborhood(g, 5, 1)
    with pytest.raises(ValueError):
        k_hop_neighborhood(g, -1, 1)
    with pytest.raises(ValueError):
        k_hop_neighborhood(g, 0, 4)


def test_directional_hops():
    # 0 -> 1 -> 2, 3 -> 1
    g = Graph.from_edges(4, [0, 1, 3], [1, 2, 1], directed=True)
    assert k_hop_neighborhood(g, 1, 1, Direction.OUTGOING) == {2}
    assert k_hop_neighborhood(g, 1, 1, Direction.INCOMING) == {0, 3}
    assert k_hop_neighborhood(g, 0, 2, Direction.OUTGOING) == {1, 2}
    assert k_hop_neighborhood(g, 2, 2, Direction.INCOMING) == {0, 1, 3}
    assert k_hop_neighborhood(g, 0, 2, Direction.ANY) == {1, 2, 3}


@pytest.mark.parametrize("directed", [True, False])
def test_erdos_renyi_matches_bfs(directed):
    g = random_graph(np.random.default_rng(12), 12, 0.2, directed=directed)
    for k in (1, 2):
        for d in Direction:
            mat = neighborhood_matrix(g, k, d)
            for u in range(g.node_count):
                expected = bfs_oracle(g, u, k, d)
                assert k_hop_neighborhood(g, u, k, d) == expected
                assert set(mat[u].indices.tolist()) == expected


@settings(max_examples=60, deadline=None)
@given(graphs(max_nodes=50))
def test_bfs_oracle_equivalence(g):
    for k in (1, 2, 3):
        for d in Direction:
            mat = neighborhood_matrix(g, k, d)
            for u in range(g.node_count):
                expected = bfs_oracle(g, u, k, d)
                assert set(mat[u].indices.tolist()) == expected
                if u % 7 == 0:
                    assert k_hop_neighborhood(g, u, k, d) == expected


@settings(max_examples=40, deadline=None)
@given(graphs(max_nodes=30))
def test_neighborhood_properties(g):
    one = neighborhood_matrix(g, 1)
    two = neighborhood_matrix(g, 2)
    for u in range(g.node_count):
        ins, outs = g.in_neighbors(u)[0], g.out_neighbors(u)[0]
        assert set(one[u].indices) == (set(ins.tolist()) | set(outs.tolist())) - {u}
        assert set(one[u].indices) <= set(two[u].indices)
    # Any-direction neighborhoods are symmetric
    assert (two != two.T).nnz == 0


@settings(max_examples=30, deadline=None)
@given(graphs(max_nodes=25))
def test_exact_mode_is_difference_of_shells(g):
    for k in (2, 3):
        inner = neighborhood_matrix(g, k - 1)
        outer = neighborhood_matrix(g, k)
        shell = neighborhood_matrix(g, k, exact=True)
        assert (shell != (outer - inner)).nnz == 0


def test_construction_dedups_and_drops_loops():
    g = Graph.from_edges(3, [0, 0, 1, 2], [1, 1, 1, 0], [2.0, 5.0, 1.0, 3.0], directed=True)
    src, dst, w = g.edges()
    assert list(zip(src.tolist(), dst.tolist(), w.tolist())) == [(0, 1, 2.0), (2, 0, 3.0)]
    u = Graph.from_edges(2, [0, 1], [1, 0], [2.0, 7.0], directed=False)
    assert u.edge_count == 1
    assert u.out_neighbors(1)[1].tolist() == [2.0]


def test_undirected_mirrors_edges():
    g = random_graph(np.random.default_rng(3), 15, 0.3, directed=False, weighted=True)
    for u in range(g.node_count):
        for v, w in zip(*g.out_neighbors(u)):
            ids, ws = g.out_neighbors(int(v))
            assert w == ws[ids.tolist().index(u)]
        assert g.out_adjacency[u] == g.in_adjacency[u]


def test_bad_weights_rejected():
    with pytest.raises(DataError):
        Graph.from_edges(2, [0], [1], [0.0])
    with pytest.raises(DataError):
        Graph.from_edges(2, [0], [3])


def test_graph_arrays_are_read_only():
    g = Graph.from_edges(3, [0], [1])
    with pytest.raises(ValueError):
        g.out_indices[0] = 2


def test_node_table_requires_every_class():
    with pytest.raises(DataError):
        NodeTable(np.zeros((3, 2)), np.array([0, 0, 2]), 3)
    with pytest.raises(DataError):
        NodeTable(np.zeros((2, 2)), np.array([0, 0, 1]), 2)


def _table(labels):
    labels = np.asarray(labels)
    return NodeTable.from_arrays(np.zeros((labels.size, 1)), labels)


def test_split_single_class_exact():
    s = stratified_split(_table(np.zeros(100, int)), (0.48, 0.32, 0.20), seed=3)
    assert [s.train.size, s.val.size, s.test.size] == [48, 32, 20]


def test_split_two_classes():
    labels = np.repeat([0, 1], 50)
    s = stratified_split(_table(labels), seed=11)
    for c in (0, 1):
        r = s.roles[labels == c]
        assert [(r == role).sum() for role in Role] == [24, 16, 10]


def test_split_deterministic():
    t = _table(np.arange(97) % 5)
    a, b = stratified_split(t, seed=7), stratified_split(t, seed=7)
    assert a.roles.tobytes() == b.roles.tobytes()
    assert stratified_split(t, seed=8).roles.tobytes() != a.roles.tobytes()


def test_split_rounding_within_one_node():
    labels = np.repeat(np.arange(4), [7, 13, 29, 51])
    s = stratified_split(_table(labels), seed=0)
    for c, size in enumerate([7, 13, 29, 51]):
        r = s.roles[labels == c]
        counts = np.array([(r == role).sum() for role in Role])
        assert counts.sum() == size
        assert np.all(np.abs(counts - np.array([0.48, 0.32, 0.20]) * size) <= 1)


def test_split_tiny_class_goes_to_train():
    labels = np.array([0] * 10 + [1, 1])
    with pytest.warns(ClassContrastWarning):
        s = stratified_split(_table(labels), seed=0)
    assert np.all(s.roles[10:] == Role.TRAIN)


def test_split_rejects_bad_fractions():
    with pytest.raises(ValueError):
        stratified_split(_table([0, 1, 0]), (0.5, 0.5, 0.0))
