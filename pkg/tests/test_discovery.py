"""
Tests for the PC algorithm over exact independence oracles.
"""

import numpy as np
import pytest

from causalforge.discovery import FaithfulnessError, IndependenceOracle, pc
from causalforge.equivalence import cpdag_of
from causalforge.graphs import Dag, enumerate_dags
from causalforge.independence import CiSignature, ci_signature


def oracle_for(g: Dag) -> IndependenceOracle:
    return IndependenceOracle(ci_signature(g))


def test_pc_recovers_collider():
    """Tests that A -> C <- B is fully oriented."""
    g = Dag.from_edges(3, [(0, 2), (1, 2)])
    result = pc(oracle_for(g))
    assert result.directed == frozenset({(0, 2), (1, 2)})
    assert result.undirected == frozenset()


def test_pc_returns_sepsets_of_chain():
    """Tests that the first separating set of the chain endpoints is the middle node."""
    g = Dag.from_edges(3, [(0, 1), (1, 2)])
    result, sepsets = pc(oracle_for(g), return_sepsets=True)
    assert sepsets == {(0, 2): frozenset({1})}
    assert result.undirected == frozenset({(0, 1), (1, 2)})


def test_pc_matches_cpdag_for_small_graphs():
    """Tests PC against the CPDAG of every DAG with up to five nodes."""
    for n in range(2, 6):
        for g in enumerate_dags(n):
            assert pc(oracle_for(g)) == cpdag_of(g)


def test_pc_counts_queries():
    """Tests that the oracle counts every query PC asks."""
    oracle = oracle_for(Dag.from_edges(3, []))
    pc(oracle)
    # three pairs, each separated by the empty set on the first query
    assert oracle.query_count == 3
    assert oracle.is_independent(0, 1)
    assert oracle.query_count == 4


def test_pc_complete_graph_asks_every_query():
    """Tests the query count when no pair is ever separated."""
    oracle = oracle_for(Dag.from_edges(3, [(0, 1), (0, 2), (1, 2)]))
    result = pc(oracle)
    assert oracle.query_count == 3 * 2
    assert len(result.undirected) == 3


def test_pc_rejects_node_count_mismatch():
    """Tests that n must agree with the oracle."""
    with pytest.raises(ValueError, match="covers 3 variables, not 4"):
        pc(oracle_for(Dag.from_edges(3, [])), n=4)


def test_pc_detects_conflicting_colliders():
    """Tests an unfaithful oracle whose colliders disagree on an edge."""
    signature = CiSignature(4, {(0, 2): [()], (1, 3): [()], (0, 3): [()]})
    with pytest.raises(FaithfulnessError, match="Conflicting orientations"):
        pc(IndependenceOracle(signature))


def test_pc_verbose(capsys):
    """Tests the summary line."""
    pc(oracle_for(Dag.from_edges(3, [(0, 2), (1, 2)])), verbose=1)
    assert "2 adjacencies, 2 directed" in capsys.readouterr().out


@pytest.mark.slow
def test_pc_on_random_six_node_graphs():
    """Tests PC on random relabelings of 6-node DAGs."""
    rng = np.random.default_rng(7)
    dags = enumerate_dags(6)
    for _ in range(500):
        g = dags[int(rng.integers(len(dags)))].relabel(rng.permutation(6).tolist())
        assert pc(oracle_for(g)) == cpdag_of(g)
