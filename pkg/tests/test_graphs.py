import numpy as np
import pytest

from sbmchange.graphs import BlockAssignment, GraphSnapshot, spectral_embedding, stack_adjacency


def test_undirected_edges_are_canonical():
    g = GraphSnapshot(4, [(2, 1), (1, 2), (0, 3)])
    assert g.edges.tolist() == [[0, 3], [1, 2]]
    assert g.n_edges == 2 and g.n_dyads == 6
    assert np.array_equal(g.adjacency, g.adjacency.T)


def test_directed_keeps_orientation():
    g = GraphSnapshot(3, [(2, 1), (1, 2)], directed=True)
    assert g.edges.tolist() == [[1, 2], [2, 1]]
    assert g.n_dyads == 6
    assert g.adjacency[2, 1] == 1 and g.adjacency[1, 2] == 1 and g.adjacency[0, 1] == 0


@pytest.mark.parametrize("edges", [[(0, 0)], [(0, 4)], [(-1, 2)]])
def test_rejects_bad_edges(edges):
    with pytest.raises(ValueError):
        GraphSnapshot(4, edges)


def test_from_adjacency_roundtrip(rng):
    a = (rng.random((6, 6)) < 0.4).astype(int)
    a = np.triu(a, 1)
    a = a + a.T
    g = GraphSnapshot.from_adjacency(a)
    assert np.array_equal(g.adjacency, a)


def test_equality_and_hash():
    a = GraphSnapshot(3, [(0, 1)], timestamp=2)
    b = GraphSnapshot(3, [(1, 0)], timestamp=2)
    assert a == b and hash(a) == hash(b)
    assert a != a.with_timestamp(3)
    assert a.edge_set() == {(0, 1)}


def test_snapshot_is_read_only():
    g = GraphSnapshot(3, [(0, 1)])
    with pytest.raises(ValueError):
        g.edges[0, 0] = 2
    with pytest.raises(ValueError):
        g.adjacency[0, 0] = 1


def test_assignment_validation_and_helpers():
    z = BlockAssignment([0, 1, 1, 2], 3)
    assert z.block_sizes().tolist() == [1, 2, 1]
    assert z.one_hot().sum(axis=0).tolist() == [1, 2, 1]
    assert z.relabel([2, 0, 1]).labels.tolist() == [2, 0, 0, 1]
    with pytest.raises(ValueError):
        BlockAssignment([0, 3], 3)
    with pytest.raises(ValueError):
        BlockAssignment([0, 1], 0)


def test_spectral_embedding_orders_by_magnitude():
    a = np.zeros((4, 4))
    a[0, 1] = a[1, 0] = 1
    emb = spectral_embedding(a)
    norms = np.linalg.norm(emb, axis=0)
    assert np.all(np.diff(norms) <= 1e-12)
    assert spectral_embedding(a, directed=True).shape == (4, 8)


def test_stack_adjacency():
    gs = [GraphSnapshot(3, [(0, 1)]), GraphSnapshot(3, [])]
    assert stack_adjacency(gs).shape == (2, 3, 3)
