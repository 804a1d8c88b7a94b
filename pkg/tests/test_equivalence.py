"""
Tests for CPDAGs, orientation propagation and equivalence-class grouping.
"""

import numpy as np
import pytest

from causalforge.equivalence import (
    Cpdag,
    CpdagError,
    cpdag_of,
    essential_graph_brute_force,
    group_mecs,
    meek_closure,
    mec_members,
    mec_members_brute_force,
    v_structures,
)
from causalforge.graphs import Dag, canonical_key, enumerate_dags
from causalforge.independence import ci_signature


@pytest.fixture
def chain():
    return Dag.from_edges(3, [(0, 1), (1, 2)])


@pytest.fixture
def collider():
    return Dag.from_edges(3, [(0, 2), (1, 2)])


def test_cpdag_of_chain_is_undirected(chain):
    """Tests that a chain has no compelled edges."""
    c = cpdag_of(chain)
    assert c.directed == frozenset()
    assert c.undirected == frozenset({(0, 1), (1, 2)})


def test_cpdag_of_collider(collider):
    """Tests that v-structure edges are directed."""
    c = cpdag_of(collider)
    assert c.directed == frozenset({(0, 2), (1, 2)})
    assert c.undirected == frozenset()
    assert v_structures(collider) == [(0, 2, 1)]
    assert c.v_structures() == [(0, 2, 1)]


def test_cpdag_propagates_below_collider():
    """Tests that A -> C <- B, C - D orients C -> D."""
    g = Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)])
    assert cpdag_of(g).directed == frozenset({(0, 2), (1, 2), (2, 3)})


def test_meek_rule_one():
    directed, undirected = meek_closure(3, {(0, 1)}, {(1, 2)})
    assert directed == frozenset({(0, 1), (1, 2)})
    assert undirected == frozenset()


def test_meek_rule_two():
    directed, undirected = meek_closure(3, {(0, 1), (1, 2)}, {(0, 2)})
    assert (0, 2) in directed
    assert undirected == frozenset()


def test_meek_rule_three():
    directed, undirected = meek_closure(4, {(1, 3), (2, 3)}, {(0, 1), (0, 2), (0, 3)})
    assert directed == frozenset({(1, 3), (2, 3), (0, 3)})
    assert undirected == frozenset({(0, 1), (0, 2)})


def test_meek_rule_four():
    directed, undirected = meek_closure(4, {(1, 2), (2, 3)}, {(0, 1), (0, 2), (0, 3)})
    assert directed == frozenset({(1, 2), (2, 3), (0, 3)})
    assert undirected == frozenset({(0, 1), (0, 2)})


def test_mec_members_of_chain(chain):
    """Tests the three members of the chain class."""
    members = mec_members(cpdag_of(chain))
    assert {m.edges for m in members} == {((0, 1), (1, 2)), ((1, 0), (2, 1)), ((1, 0), (1, 2))}
    assert chain in members


def test_mec_members_of_collider_and_triangle(collider):
    """Tests a singleton class and the complete 3-node class."""
    assert mec_members(cpdag_of(collider)) == [collider]
    triangle = Dag.from_edges(3, [(0, 1), (0, 2), (1, 2)])
    assert len(mec_members(cpdag_of(triangle))) == 6


def test_mec_members_match_brute_force():
    """Tests backtracking enumeration against filtering of all labeled DAGs."""
    for n in range(2, 5):
        for g in enumerate_dags(n):
            c = cpdag_of(g)
            assert mec_members(c) == mec_members_brute_force(c)


def test_mec_members_reject_inconsistent_cpdag():
    """Tests that a cyclic set of compelled edges has no extension."""
    with pytest.raises(CpdagError, match="no consistent DAG extension"):
        mec_members(Cpdag(3, directed=[(0, 1), (1, 2), (2, 0)]))


def test_cpdag_validation():
    """Tests rejection of duplicate and invalid edges."""
    with pytest.raises(ValueError, match="more than one edge"):
        Cpdag(3, directed=[(0, 1)], undirected=[(1, 0)])
    with pytest.raises(ValueError, match="Invalid edge"):
        Cpdag(3, undirected=[(0, 3)])


def test_cpdag_incidence():
    """Tests that undirected edges appear as two arcs."""
    c = Cpdag(3, directed=[(0, 2)], undirected=[(1, 2)])
    assert c.incidence.tolist() == [[False, False, True], [False, False, True], [False, True, False]]
    assert c.skeleton == frozenset({(0, 2), (1, 2)})
    assert c.adjacent(2, 1) and not c.adjacent(0, 1)


def test_cpdag_matches_brute_force_essential_graph():
    """Tests the orientation rules against member agreement."""
    for n in range(2, 5):
        for g in enumerate_dags(n):
            assert cpdag_of(g) == essential_graph_brute_force(g)


def test_group_mecs_counts():
    """Tests the number of classes and the class sizes."""
    expected = {2: 2, 3: 5, 4: 20, 5: 142}
    for n, count in expected.items():
        dags = enumerate_dags(n)
        mecs = group_mecs(dags)
        assert len(mecs) == count
        assert sum(len(m.unlabeled) for m in mecs) == len(dags)
    dags = enumerate_dags(4)
    assert round(len(dags) / len(group_mecs(dags)), 2) == 1.55


def test_group_mecs_representatives():
    """Tests that each representative belongs to its own class."""
    for mec in group_mecs(enumerate_dags(4)):
        assert mec.representative in mec.members
        assert mec.size == len(mec.members)
        assert mec.node_count == 4
        assert mec.signature == ci_signature(mec.representative)
        assert all(canonical_key(cpdag_of(g)) == mec.canonical_key for g in mec.unlabeled)


def test_members_share_the_class_signature():
    """Tests every member of every class for n <= 4 and a sample of 5-node classes."""
    for n in range(2, 5):
        for mec in group_mecs(enumerate_dags(n)):
            assert all(ci_signature(g) == mec.signature for g in mec.members)
    mecs = group_mecs(enumerate_dags(5))
    rng = np.random.default_rng(5)
    for idx in rng.choice(len(mecs), size=25, replace=False):
        mec = mecs[int(idx)]
        assert all(ci_signature(g) == mec.signature for g in mec.members)


def test_grouping_by_cpdag_equals_grouping_by_signature():
    """Tests that equal CPDAG keys coincide with equal independence models."""
    for n in range(2, 6):
        pairs = {(canonical_key(cpdag_of(g)), ci_signature(g).canonical_key()) for g in enumerate_dags(n)}
        assert len(pairs) == len({a for a, _ in pairs}) == len({b for _, b in pairs})


def test_group_mecs_verbose(capsys):
    """Tests the verbose summary line."""
    group_mecs(enumerate_dags(3), verbose=1)
    assert "6 DAGs fall into 5 equivalence classes" in capsys.readouterr().out


@pytest.mark.slow
def test_group_mecs_six_nodes():
    """Tests the 6-node class count and the signatures of sampled classes."""
    dags = enumerate_dags(6)
    mecs = group_mecs(dags)
    assert len(mecs) == 2201
    assert sum(len(m.unlabeled) for m in mecs) == len(dags)
    rng = np.random.default_rng(6)
    for idx in rng.choice(len(mecs), size=40, replace=False):
        mec = mecs[int(idx)]
        assert all(ci_signature(g) == mec.signature for g in mec.members)
