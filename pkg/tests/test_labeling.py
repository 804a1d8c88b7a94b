"""
Tests for relation hypotheses and class-level labels.
"""

import numpy as np
import pytest

from causalforge.equivalence import Mec, cpdag_of, group_mecs, mec_members
from causalforge.graphs import Dag, canonical_key, enumerate_dags
from causalforge.independence import ci_signature
from causalforge.labeling import (
    Hypothesis,
    RelationType,
    all_hypotheses,
    label,
    label_table,
    relation_holds,
    relation_matrix,
)


def mec_of(g: Dag) -> Mec:
    c = cpdag_of(g)
    return Mec(canonical_key(c), g, tuple(mec_members(c)), ci_signature(g))


@pytest.fixture
def diamond():
    """A -> B -> D, A -> C -> D"""
    return Dag.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


def test_relation_holds_in_diamond(diamond):
    """Tests each relation type on a single DAG."""
    assert relation_holds(diamond, Hypothesis(RelationType.IS_PARENT, 0, 1))
    assert not relation_holds(diamond, Hypothesis(RelationType.IS_PARENT, 0, 3))
    assert relation_holds(diamond, Hypothesis(RelationType.IS_ANCESTOR, 0, 3))
    assert not relation_holds(diamond, Hypothesis(RelationType.IS_ANCESTOR, 0, 1))
    assert relation_holds(diamond, Hypothesis(RelationType.IS_CHILD, 3, 1))
    assert relation_holds(diamond, Hypothesis(RelationType.IS_DESCENDANT, 3, 0))
    assert not relation_holds(diamond, Hypothesis(RelationType.IS_DESCENDANT, 1, 0))
    assert relation_holds(diamond, Hypothesis(RelationType.HAS_COLLIDER, 1, 2))
    assert relation_holds(diamond, Hypothesis(RelationType.HAS_CONFOUNDER, 1, 2))
    assert not relation_holds(diamond, Hypothesis(RelationType.HAS_CONFOUNDER, 0, 3))


def test_relation_matrix_agrees_with_relation_holds():
    """Tests the vectorized decision against the scalar one on all 4-node DAGs."""
    for g in enumerate_dags(4):
        matrix = relation_matrix(g)
        assert matrix.shape == (6, 4, 4)
        assert not matrix[:, np.arange(4), np.arange(4)].any()
        np.testing.assert_array_equal(matrix[2], matrix[0].T)
        np.testing.assert_array_equal(matrix[3], matrix[1].T)
        for h in all_hypotheses(4):
            assert matrix[h.relation.index, h.i, h.j] == relation_holds(g, h)


def test_collider_class_labels():
    """Tests that the collider class has exactly six valid hypotheses."""
    m = mec_of(Dag.from_edges(3, [(0, 2), (1, 2)]))
    valid = [h for h in all_hypotheses(3) if label(m, h)]
    assert len(valid) == 6
    assert Hypothesis(RelationType.HAS_COLLIDER, 1, 0) in valid
    assert Hypothesis(RelationType.IS_CHILD, 2, 0) in valid


def test_chain_class_has_no_valid_hypotheses():
    """Tests that orientations differing across members are never valid."""
    m = mec_of(Dag.from_edges(3, [(0, 1), (1, 2)]))
    assert m.size == 3
    assert not any(label(m, h) for h in all_hypotheses(3))
    assert not label_table(m).any()


def test_label_table_agrees_with_label():
    """Tests the class table against per-hypothesis labels for all 4-node classes."""
    for m in group_mecs(enumerate_dags(4)):
        table = label_table(m)
        for h in all_hypotheses(4):
            assert int(table[h.relation.index, h.i, h.j]) == label(m, h)


def test_collider_shared_without_a_shared_collider_node():
    """
    Tests the undirected class over the skeleton A-B, A-D, B-C, C-D, B-D.

    Every member has a common child of B and D, but it is A in some members and
    C in others, so Has-Collider(B, D) is valid while no node is a collider in
    every member.
    """
    m = mec_of(Dag.from_edges(4, [(1, 0), (1, 2), (1, 3), (3, 0), (3, 2)]))
    assert cpdag_of(m.representative).directed == frozenset()
    assert label(m, Hypothesis(RelationType.HAS_COLLIDER, 1, 3)) == 1
    assert label(m, Hypothesis(RelationType.HAS_COLLIDER, 3, 1)) == 1
    common_children = {g.child_mask(1) & g.child_mask(3) for g in m.members}
    assert 0b0001 in common_children and 0b0100 in common_children
    assert all(mask != 0 for mask in common_children)
    table = label_table(m)
    assert int(table.sum()) == 2


def test_valid_labels_per_relation_on_four_nodes():
    """Tests the number of valid hypotheses per relation over all 4-node classes."""
    totals = sum(label_table(m).sum(axis=(1, 2)) for m in group_mecs(enumerate_dags(4)))
    assert dict(zip([r.value for r in RelationType], totals.tolist())) == {
        "Is-Parent": 30,
        "Is-Ancestor": 4,
        "Is-Child": 30,
        "Is-Descendant": 4,
        "Has-Collider": 36,
        "Has-Confounder": 6,
    }


def test_all_hypotheses_order():
    """Tests the count and the (i, j, relation) order."""
    hypotheses = all_hypotheses(3)
    assert len(hypotheses) == 36
    assert hypotheses[0] == Hypothesis(RelationType.IS_PARENT, 0, 1)
    assert hypotheses[5] == Hypothesis(RelationType.HAS_CONFOUNDER, 0, 1)
    assert hypotheses[6] == Hypothesis(RelationType.IS_PARENT, 0, 2)
    assert hypotheses[-1] == Hypothesis(RelationType.HAS_CONFOUNDER, 2, 1)


def test_relation_type_lookup():
    """Tests names, indices and unknown names."""
    assert RelationType.from_value("Has-Collider") is RelationType.HAS_COLLIDER
    assert [r.index for r in RelationType] == list(range(6))
    with pytest.raises(ValueError, match="Unknown relation"):
        RelationType.from_value("Is-Sibling")


def test_invalid_hypotheses():
    """Tests index validation."""
    with pytest.raises(ValueError, match="two distinct"):
        Hypothesis(RelationType.IS_PARENT, 1, 1)
    with pytest.raises(ValueError, match="does not fit"):
        relation_holds(Dag.from_edges(2, []), Hypothesis(RelationType.IS_PARENT, 0, 2))
    with pytest.raises(ValueError, match="at least two variables"):
        all_hypotheses(1)
