"""
d-separation and conditional-independence signatures.

Two independent deciders are provided. `d_separated` runs a reachability
search over (node, direction) states on bit masks and is used everywhere in
the pipeline. `d_separated_by_paths` enumerates every simple path of the
skeleton with networkx and applies the blocking rules directly; it exists to
cross-check the first one.
"""

import itertools
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, FrozenSet

import networkx as nx

from causalforge.graphs import Dag, iter_bits, upper_pairs

Pair = Tuple[int, int]

_UP = 0  # arrived from a child, moving towards parents
_DOWN = 1  # arrived from a parent, moving towards children


def _conditioning_mask(g: Dag, i: int, j: int, z: Iterable[int]) -> int:
    n = g.node_count
    for v in (i, j):
        if not 0 <= v < n:
            raise ValueError(f"Node index {v} is out of range for a graph with {n} nodes.")
    if i == j:
        raise ValueError(f"A d-separation query needs two distinct nodes, got {i} twice.")
    mask = 0
    for v in z:
        if not 0 <= v < n:
            raise ValueError(f"Conditioning node {v} is out of range for a graph with {n} nodes.")
        mask |= 1 << v
    if (mask >> i) & 1 or (mask >> j) & 1:
        raise ValueError(f"The conditioning set must not contain the queried nodes {i} and {j}.")
    return mask


def _collider_openers(g: Dag, z_mask: int) -> int:
    """Nodes that are in Z or have a descendant in Z."""
    openers = z_mask
    for v in iter_bits(z_mask):
        openers |= g.ancestor_mask(v)
    return openers


def _reachable(g: Dag, source: int, z_mask: int) -> int:
    """Bit mask of the nodes joined to `source` by an active trail given Z."""
    openers = _collider_openers(g, z_mask)
    visited = [0, 0]
    reachable = 0
    stack = [(source, _UP)]
    while stack:
        v, direction = stack.pop()
        bit = 1 << v
        if visited[direction] & bit:
            continue
        visited[direction] |= bit
        observed = z_mask & bit
        if not observed:
            reachable |= bit

        if direction == _UP:
            if not observed:
                stack.extend((p, _UP) for p in iter_bits(g.parent_mask(v)))
                stack.extend((c, _DOWN) for c in iter_bits(g.child_mask(v)))
        else:
            if not observed:
                stack.extend((c, _DOWN) for c in iter_bits(g.child_mask(v)))
            if openers & bit:
                stack.extend((p, _UP) for p in iter_bits(g.parent_mask(v)))
    return reachable


def d_separated(g: Dag, i: int, j: int, z: Iterable[int] = ()) -> bool:
    """
    Decide whether Xi and Xj are d-separated given Z in `g`.

    Parameters
    ----------
    g : Dag
        The graph.
    i, j : int
        Distinct node indices.
    z : Iterable[int], optional
        The conditioning set; must not contain i or j.

    Returns
    -------
    bool
        True iff every path between i and j is blocked by Z.

    Raises
    ------
    ValueError
        On out-of-range indices, i == j, or i/j in Z.
    """
    z_mask = _conditioning_mask(g, i, j, z)
    return not (_reachable(g, i, z_mask) >> j) & 1


def d_separated_by_paths(g: Dag, i: int, j: int, z: Iterable[int] = ()) -> bool:
    """
    Decide d-separation by enumerating the simple paths of the skeleton.

    A non-collider on a path blocks it when it is in Z; a collider blocks it
    unless it or one of its descendants is in Z.
    """
    z_mask = _conditioning_mask(g, i, j, z)
    openers = _collider_openers(g, z_mask)
    skeleton = nx.Graph()
    skeleton.add_nodes_from(range(g.node_count))
    skeleton.add_edges_from(g.edges)
    for path in nx.all_simple_paths(skeleton, i, j):
        if _path_is_active(g, path, z_mask, openers):
            return False
    return True


def _path_is_active(g: Dag, path: Sequence[int], z_mask: int, openers: int) -> bool:
    for a, v, b in zip(path, path[1:], path[2:]):
        if g.has_edge(a, v) and g.has_edge(b, v):
            if not (openers >> v) & 1:
                return False
        elif (z_mask >> v) & 1:
            return False
    return True


class CiSignature:
    """
    The complete set of conditional independences of a graph.

    For every unordered pair i < j the signature stores the tuple of
    conditioning sets Z (subsets of the other nodes) under which the pair is
    independent, ordered by size and then lexicographically by sorted indices.
    A pair with no separating set is correlated.

    Parameters
    ----------
    node_count : int
        The number of variables.
    separating : Mapping[Tuple[int, int], Iterable[Iterable[int]]]
        Separating sets per pair; pairs that are absent are correlated.
    """

    def __init__(self, node_count: int, separating: Mapping[Pair, Iterable[Iterable[int]]]):
        if node_count < 1:
            raise ValueError(f"A signature needs at least one variable, got {node_count}.")
        sets: Dict[Pair, Tuple[FrozenSet[int], ...]] = {}
        for (a, b), zs in separating.items():
            i, j = (a, b) if a < b else (b, a)
            if i == j or not 0 <= i or j >= node_count:
                raise ValueError(f"Invalid pair ({a}, {b}) for {node_count} variables.")
            normalized = {frozenset(z) for z in zs}
            for z in normalized:
                if i in z or j in z or any(not 0 <= v < node_count for v in z):
                    raise ValueError(f"Invalid conditioning set {sorted(z)} for pair ({i}, {j}).")
            if normalized:
                sets[(i, j)] = tuple(sorted(normalized, key=_set_order))
        self._node_count = node_count
        self._sets = sets

    @property
    def node_count(self) -> int:
        """The number of variables N."""
        return self._node_count

    def pairs(self) -> List[Pair]:
        """All unordered pairs (i, j), i < j, in lexicographic order."""
        return upper_pairs(self._node_count)

    def separating_sets(self, i: int, j: int) -> Tuple[FrozenSet[int], ...]:
        """The ordered separating sets of the pair; empty iff the pair is correlated."""
        return self._sets.get((min(i, j), max(i, j)), ())

    def is_independent(self, i: int, j: int, z: Iterable[int] = ()) -> bool:
        """Return True iff i and j are independent given exactly the set z."""
        return frozenset(z) in self.separating_sets(i, j)

    def is_correlated(self, i: int, j: int) -> bool:
        """Return True iff no set separates i and j."""
        return not self.separating_sets(i, j)

    def correlated_pairs(self) -> List[Pair]:
        """The pairs (i, j), i < j, that no set separates."""
        return [pair for pair in self.pairs() if pair not in self._sets]

    def statement_count(self) -> int:
        """The number of premise statements this signature verbalizes to."""
        return sum(max(1, len(self.separating_sets(i, j))) for i, j in self.pairs())

    def relabel(self, perm: Sequence[int]) -> "CiSignature":
        """Return the signature of the graph whose node i moved to position perm[i]."""
        if sorted(perm) != list(range(self._node_count)):
            raise ValueError(f"{list(perm)} is not a permutation of {self._node_count} nodes.")
        return CiSignature(
            self._node_count,
            {(perm[i], perm[j]): [{perm[v] for v in z} for z in zs] for (i, j), zs in self._sets.items()},
        )

    def _triples(self) -> Tuple[Tuple[int, int, int], ...]:
        return tuple(
            sorted((i, j, sum(1 << v for v in z)) for (i, j), zs in self._sets.items() for z in zs)
        )

    def canonical_key(self) -> Tuple[Tuple[int, int, int], ...]:
        """A relabeling-invariant form: the smallest triple list over all node permutations."""
        return min(self.relabel(perm)._triples() for perm in itertools.permutations(range(self._node_count)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CiSignature):
            return NotImplemented
        return self._node_count == other._node_count and self._sets == other._sets

    def __hash__(self) -> int:
        return hash((self._node_count, self._triples()))

    def __repr__(self) -> str:
        independent = sum(len(zs) for zs in self._sets.values())
        return f"CiSignature(n={self._node_count}, independences={independent})"


def _set_order(z: FrozenSet[int]) -> Tuple[int, Tuple[int, ...]]:
    return len(z), tuple(sorted(z))


def ci_signature(g: Dag) -> CiSignature:
    """
    Enumerate every (i, j, Z) with Xi and Xj d-separated given Z.

    Adjacent pairs are never separated and are skipped.
    """
    n = g.node_count
    separating: Dict[Pair, List[Tuple[int, ...]]] = {}
    for i, j in upper_pairs(n):
        if g.adjacent(i, j):
            continue
        others = [v for v in range(n) if v != i and v != j]
        for size in range(len(others) + 1):
            for z in itertools.combinations(others, size):
                z_mask = sum(1 << v for v in z)
                if not (_reachable(g, i, z_mask) >> j) & 1:
                    separating.setdefault((i, j), []).append(z)
    return CiSignature(n, separating)


def markov_check(g: Dag) -> bool:
    """
    Self-test of the d-separation decider: every node must be d-separated
    from its non-descendants (outside its parents) given its parents.
    """
    n = g.node_count
    for v in range(n):
        parents = g.parent_mask(v)
        outside = ((1 << n) - 1) & ~g.descendant_mask(v) & ~parents & ~(1 << v)
        for u in iter_bits(outside):
            if not d_separated(g, v, u, iter_bits(parents)):
                return False
    return True
