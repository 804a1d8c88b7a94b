"""
Causal relation hypotheses and their validity over an equivalence class.

A hypothesis is valid for a class only if it holds in every member DAG.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List

import numpy as np

from causalforge.equivalence import Mec
from causalforge.graphs import Dag


class RelationType(Enum):
    """The six relation types, in verbalization-template order."""

    IS_PARENT = "Is-Parent"
    IS_ANCESTOR = "Is-Ancestor"
    IS_CHILD = "Is-Child"
    IS_DESCENDANT = "Is-Descendant"
    HAS_COLLIDER = "Has-Collider"
    HAS_CONFOUNDER = "Has-Confounder"

    @property
    def index(self) -> int:
        return _RELATION_ORDER.index(self)

    @classmethod
    def from_value(cls, value: str) -> "RelationType":
        """Look up a relation by its "Is-Parent" style name."""
        try:
            return cls(value)
        except ValueError as e:
            known = ", ".join(r.value for r in cls)
            raise ValueError(f"Unknown relation '{value}'; expected one of {known}.") from e


_RELATION_ORDER = list(RelationType)


@dataclass(frozen=True)
class Hypothesis:
    """The claim `relation(Xi, Xj)` for an ordered pair i != j."""

    relation: RelationType
    i: int
    j: int

    def __post_init__(self):
        if self.i == self.j or self.i < 0 or self.j < 0:
            raise ValueError(f"A hypothesis needs two distinct non-negative indices, got ({self.i}, {self.j}).")


def _check_indices(g: Dag, h: Hypothesis) -> None:
    n = g.node_count
    if h.i >= n or h.j >= n:
        raise ValueError(f"Hypothesis on ({h.i}, {h.j}) does not fit a graph with {n} nodes.")


def relation_holds(g: Dag, h: Hypothesis) -> bool:
    """Decide a hypothesis in a single DAG."""
    _check_indices(g, h)
    i, j = h.i, h.j
    r = h.relation
    if r is RelationType.IS_PARENT:
        return g.has_edge(i, j)
    if r is RelationType.IS_CHILD:
        return g.has_edge(j, i)
    if r is RelationType.IS_ANCESTOR:
        return bool((g.ancestor_mask(j) >> i) & 1) and not g.has_edge(i, j)
    if r is RelationType.IS_DESCENDANT:
        return bool((g.ancestor_mask(i) >> j) & 1) and not g.has_edge(j, i)
    if r is RelationType.HAS_COLLIDER:
        return g.child_mask(i) & g.child_mask(j) != 0
    return g.parent_mask(i) & g.parent_mask(j) != 0


def relation_matrix(g: Dag) -> np.ndarray:
    """
    Decide every hypothesis of a DAG at once.

    Returns
    -------
    np.ndarray
        A boolean array of shape (6, N, N); entry [r.index, i, j] equals
        `relation_holds(g, Hypothesis(r, i, j))` for i != j. The diagonal is False.
    """
    n = g.node_count
    a = g.adjacency.astype(np.int64)
    reach = g.adjacency.copy()
    for _ in range(n):
        reach = reach | ((reach.astype(np.int64) @ a) > 0)
    off_diagonal = ~np.eye(n, dtype=bool)
    parent = g.adjacency.copy()
    ancestor = reach & ~parent
    collider = ((a @ a.T) > 0) & off_diagonal
    confounder = ((a.T @ a) > 0) & off_diagonal
    return np.stack([parent, ancestor, parent.T, ancestor.T, collider, confounder])


def label(m: Mec, h: Hypothesis) -> int:
    """Return 1 iff the hypothesis holds in every member of the class."""
    return int(all(relation_holds(g, h) for g in m.members))


def label_table(m: Mec) -> np.ndarray:
    """All labels of a class as a (6, N, N) boolean array, indexed like `relation_matrix`."""
    return np.logical_and.reduce([relation_matrix(g) for g in m.members])


def all_hypotheses(n: int) -> List[Hypothesis]:
    """
    All 6 * N * (N - 1) hypotheses over ordered pairs.

    Ordered by (i, j) lexicographically, then by relation type.
    """
    if n < 2:
        raise ValueError(f"Hypotheses need at least two variables, got {n}.")
    return [Hypothesis(r, i, j) for i in range(n) for j in range(n) if i != j for r in RelationType]
