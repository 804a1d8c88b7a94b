"""
Tests for the Dag class, canonical keys and DAG enumeration.
"""

import itertools

import networkx as nx
import numpy as np
import pytest

from causalforge.equivalence import Cpdag
from causalforge.graphs import (
    Dag,
    all_labeled_dags,
    canonical_key,
    check_enumeration_budget,
    enumerate_dags,
    is_acyclic,
    kin,
    to_dot,
    to_edge_list,
)


@pytest.fixture
def chain():
    """A -> B -> C"""
    return Dag.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def fork():
    """A <- B -> C"""
    return Dag.from_edges(3, [(1, 0), (1, 2)])


@pytest.fixture
def collider():
    """A -> C <- B"""
    return Dag.from_edges(3, [(0, 2), (1, 2)])


def test_dag_basic_properties(chain):
    """Tests node count, names, edges and the read-only adjacency."""
    assert chain.node_count == 3
    assert chain.node_names == ("A", "B", "C")
    assert chain.edges == ((0, 1), (1, 2))
    assert chain.edge_count == 2
    assert chain.has_edge(0, 1) and not chain.has_edge(1, 0)
    assert chain.adjacent(1, 0)
    with pytest.raises(ValueError):
        chain.adjacency[0, 2] = True


def test_dag_rejects_cycles_and_self_loops():
    """Tests that cyclic graphs and self-loops are rejected."""
    with pytest.raises(ValueError, match="cycle"):
        Dag.from_edges(3, [(0, 1), (1, 2), (2, 0)])
    with pytest.raises(ValueError, match="self-loop"):
        Dag.from_edges(2, [(1, 1)])


def test_dag_rejects_bad_shapes_and_names():
    """Tests matrix shape, node count ceiling and name validation."""
    with pytest.raises(ValueError, match="square"):
        Dag(np.zeros((2, 3), dtype=bool))
    with pytest.raises(ValueError, match="between 1 and 8"):
        Dag(np.zeros((9, 9), dtype=bool))
    with pytest.raises(ValueError, match="distinct node names"):
        Dag(np.zeros((2, 2), dtype=bool), node_names=["A", "A"])


def test_from_mask_uses_row_major_pairs():
    """Tests that bit k of the mask switches on the k-th (i < j) pair."""
    g = Dag.from_mask(3, 0b101)
    assert g.edges == ((0, 1), (1, 2))
    with pytest.raises(ValueError):
        Dag.from_mask(3, 8)


def test_kin_of_chain(chain):
    """Tests parents, children, ancestors and descendants."""
    middle = kin(chain, 1)
    assert middle.parents == frozenset({0})
    assert middle.children == frozenset({2})
    assert kin(chain, 2).ancestors == frozenset({0, 1})
    assert kin(chain, 0).descendants == frozenset({1, 2})
    assert kin(chain, 0).parents == frozenset()


def test_kin_rejects_unknown_node(chain):
    """Tests that an out-of-range node index is an error."""
    with pytest.raises(ValueError, match="out of range"):
        kin(chain, 3)


def test_canonical_key_identifies_isomorphic_graphs(chain, fork, collider):
    """Tests that the key ignores labels but separates different shapes."""
    reversed_chain = Dag.from_edges(3, [(2, 1), (1, 0)])
    assert canonical_key(chain) == canonical_key(reversed_chain)
    assert canonical_key(chain) != canonical_key(fork)
    assert canonical_key(fork) != canonical_key(collider)
    assert canonical_key(chain) != canonical_key(collider)


def test_canonical_key_is_invariant_under_relabeling():
    """Tests every 4-node class under every relabeling."""
    for g in enumerate_dags(4):
        key = canonical_key(g)
        for perm in itertools.permutations(range(4)):
            assert canonical_key(g.relabel(perm)) == key


def test_canonical_key_handles_mixed_graphs():
    """Tests keys of partially directed graphs."""
    a = Cpdag(3, directed=[(0, 1)], undirected=[(1, 2)])
    b = Cpdag(3, directed=[(2, 1)], undirected=[(0, 1)])
    c = Cpdag(3, directed=[(1, 0)], undirected=[(1, 2)])
    assert canonical_key(a) == canonical_key(b)
    assert canonical_key(a) != canonical_key(c)


def test_canonical_key_single_node():
    """Tests the key of the one-node graph."""
    assert canonical_key(Dag(np.zeros((1, 1), dtype=bool))) == b"\x01\x00"


def test_enumeration_counts():
    """Tests the number of unlabeled DAGs for small node counts."""
    assert [len(enumerate_dags(n)) for n in range(1, 6)] == [1, 2, 6, 31, 302]


def test_enumeration_mean_edges():
    """Tests the mean number of edges per unlabeled DAG."""
    expected = {2: 0.50, 3: 1.67, 4: 3.48, 5: 5.89}
    for n, mean in expected.items():
        dags = enumerate_dags(n)
        assert round(sum(g.edge_count for g in dags) / len(dags), 2) == mean


def test_enumeration_is_sorted_and_upper_triangular():
    """Tests that representatives are unique, sorted by key and upper triangular."""
    dags = enumerate_dags(4)
    keys = [canonical_key(g) for g in dags]
    assert keys == sorted(keys)
    assert len(set(keys)) == len(keys)
    for g in dags:
        assert not np.tril(g.adjacency).any()


def test_enumeration_matches_brute_force():
    """Tests that every labeled DAG falls into an enumerated class and vice versa."""
    for n in range(1, 5):
        labeled = {canonical_key(g) for g in all_labeled_dags(n)}
        assert labeled == {canonical_key(g) for g in enumerate_dags(n)}


def test_all_labeled_dags_counts():
    """Tests the number of labeled DAGs."""
    assert [sum(1 for _ in all_labeled_dags(n)) for n in range(1, 5)] == [1, 3, 25, 543]


def test_enumeration_range_checks():
    """Tests the enumeration cap."""
    with pytest.raises(ValueError, match="allowed range is 1..6"):
        enumerate_dags(7)
    with pytest.raises(ValueError):
        enumerate_dags(0)
    with pytest.raises(ValueError, match="allowed range is 1..3"):
        enumerate_dags(4, max_nodes=3)


def test_enumeration_resource_limit():
    """Tests that enumerations beyond the mask budget are refused up front."""
    check_enumeration_budget(6)
    with pytest.raises(ValueError, match=r"2,097,152 adjacency masks, above the resource limit of 32,768"):
        enumerate_dags(7, max_nodes=7)
    with pytest.raises(ValueError, match="resource limit"):
        enumerate_dags(8, max_nodes=8)


@pytest.mark.slow
def test_enumeration_six_nodes():
    """Tests the 6-node enumeration."""
    dags = enumerate_dags(6)
    assert len(dags) == 5984
    assert round(sum(g.edge_count for g in dags) / len(dags), 2) == 8.77


def test_relabel(chain):
    """Tests that relabel moves node i to position perm[i]."""
    moved = chain.relabel([2, 1, 0])
    assert moved.edges == ((1, 0), (2, 1))
    with pytest.raises(ValueError, match="not a permutation"):
        chain.relabel([0, 0, 1])


def test_is_acyclic():
    """Tests the standalone acyclicity helper."""
    assert is_acyclic(np.array([[0, 1], [0, 0]], dtype=bool))
    assert not is_acyclic(np.array([[0, 1], [1, 0]], dtype=bool))


def test_equality_and_hash(chain):
    """Tests value semantics."""
    same = Dag.from_edges(3, [(1, 2), (0, 1)])
    assert chain == same
    assert hash(chain) == hash(same)
    assert chain != Dag.from_edges(3, [(0, 1)])
    assert chain != Dag.from_edges(3, [(0, 1), (1, 2)], node_names=["X", "Y", "Z"])


def test_edge_list_and_dot(chain):
    """Tests the debug exports."""
    assert to_edge_list(chain) == "A->B;B->C"
    assert to_edge_list(Cpdag(3, directed=[(0, 2)], undirected=[(0, 1)])) == "A->C;A--B"
    dot = to_dot(Cpdag(3, directed=[(0, 2)], undirected=[(0, 1)]))
    assert dot.startswith("digraph G {")
    assert '"A" -> "C";' in dot
    assert '"A" -> "B" [dir=none];' in dot


def test_to_networkx(chain):
    """Tests the networkx view."""
    graph = chain.to_networkx()
    assert nx.is_directed_acyclic_graph(graph)
    assert list(graph.edges) == [(0, 1), (1, 2)]
    assert graph.nodes[2]["name"] == "C"
