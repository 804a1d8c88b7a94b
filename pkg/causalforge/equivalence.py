"""
Markov equivalence: CPDAGs, orientation propagation and class enumeration.

A CPDAG (completed partially directed acyclic graph) summarizes a Markov
equivalence class: its directed edges are oriented the same way in every
member, its undirected edges take both orientations across members.
"""

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from causalforge.graphs import (
    CanonicalKey,
    Dag,
    all_labeled_dags,
    canonical_key,
    default_names,
    iter_bits,
    to_edge_list,
)
from causalforge.independence import CiSignature, ci_signature

Pair = Tuple[int, int]


class CpdagError(ValueError):
    """Raised when a partially directed graph has no consistent DAG extension."""


class Cpdag:
    """
    An immutable partially directed graph.

    Parameters
    ----------
    node_count : int
        The number of nodes.
    directed : Iterable[Tuple[int, int]]
        Directed edges (a, b), meaning a -> b.
    undirected : Iterable[Tuple[int, int]]
        Undirected edges; stored with the smaller index first.
    node_names : Sequence[str], optional
        Variable labels, defaulting to "A", "B", ...

    Raises
    ------
    ValueError
        If an edge is a self-loop, uses an out-of-range index, or a node pair
        carries more than one edge.
    """

    def __init__(
        self,
        node_count: int,
        directed: Iterable[Pair] = (),
        undirected: Iterable[Pair] = (),
        node_names: Optional[Sequence[str]] = None,
    ):
        directed_set = frozenset((int(a), int(b)) for a, b in directed)
        undirected_set = frozenset((min(int(a), int(b)), max(int(a), int(b))) for a, b in undirected)
        seen: Set[Pair] = set()
        for a, b in list(directed_set) + list(undirected_set):
            if a == b or not (0 <= a < node_count and 0 <= b < node_count):
                raise ValueError(f"Invalid edge ({a}, {b}) for a graph with {node_count} nodes.")
            pair = (min(a, b), max(a, b))
            if pair in seen:
                raise ValueError(f"Nodes {pair[0]} and {pair[1]} are joined by more than one edge.")
            seen.add(pair)

        names = default_names(node_count) if node_names is None else tuple(node_names)
        if len(names) != node_count:
            raise ValueError(f"Expected {node_count} node names, got {len(names)}.")
        self._node_count = node_count
        self._directed = directed_set
        self._undirected = undirected_set
        self._names = names

    @property
    def node_count(self) -> int:
        return self._node_count

    @property
    def node_names(self) -> Tuple[str, ...]:
        return self._names

    @property
    def directed(self) -> FrozenSet[Pair]:
        return self._directed

    @property
    def undirected(self) -> FrozenSet[Pair]:
        return self._undirected

    @property
    def skeleton(self) -> FrozenSet[Pair]:
        """All adjacent pairs (i, j) with i < j."""
        return frozenset((min(a, b), max(a, b)) for a, b in self._directed) | self._undirected

    @property
    def incidence(self) -> np.ndarray:
        """Arc matrix; an undirected edge sets both (i, j) and (j, i)."""
        matrix = np.zeros((self._node_count, self._node_count), dtype=bool)
        for a, b in self._directed:
            matrix[a, b] = True
        for a, b in self._undirected:
            matrix[a, b] = matrix[b, a] = True
        return matrix

    def adjacent(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.skeleton

    def v_structures(self) -> List[Tuple[int, int, int]]:
        """Directed colliders (i, k, j), i < j, whose tails are non-adjacent."""
        parents: Dict[int, List[int]] = {}
        for a, b in self._directed:
            parents.setdefault(b, []).append(a)
        skeleton = self.skeleton
        found = []
        for k, ps in parents.items():
            for i in ps:
                for j in ps:
                    if i < j and (i, j) not in skeleton:
                        found.append((i, k, j))
        return sorted(found)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Cpdag):
            return NotImplemented
        return (
            self._node_count == other._node_count
            and self._directed == other._directed
            and self._undirected == other._undirected
        )

    def __hash__(self) -> int:
        return hash((self._node_count, self._directed, self._undirected))

    def __repr__(self) -> str:
        return f"Cpdag({to_edge_list(self)!r}, n={self._node_count})"


def skeleton(g: Dag) -> FrozenSet[Pair]:
    """The unordered adjacencies (i, j), i < j, of a DAG."""
    return frozenset((min(a, b), max(a, b)) for a, b in g.edges)


def v_structures(g: Dag) -> List[Tuple[int, int, int]]:
    """All (i, k, j) with i < j, i -> k <- j and i, j non-adjacent."""
    found = []
    for k in range(g.node_count):
        parents = list(iter_bits(g.parent_mask(k)))
        for a in parents:
            for b in parents:
                if a < b and not g.adjacent(a, b):
                    found.append((a, k, b))
    return sorted(found)


def meek_closure(n: int, directed: Iterable[Pair], undirected: Iterable[Pair]) -> Tuple[FrozenSet[Pair], FrozenSet[Pair]]:
    """
    Propagate orientations with the four Meek rules until a fixed point.

    For an undirected edge a - b, a -> b is forced when
      R1: some c -> a with c, b non-adjacent,
      R2: some a -> c -> b,
      R3: two non-adjacent c, d with a - c, a - d, c -> b and d -> b,
      R4: some a - c, c -> d, d -> b with c, b non-adjacent and a, d adjacent.

    Returns
    -------
    Tuple[FrozenSet, FrozenSet]
        The closed directed and undirected edge sets.
    """
    dirs: Set[Pair] = set(directed)
    undir: Set[Pair] = {(min(a, b), max(a, b)) for a, b in undirected}

    def is_undirected(a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in undir

    def is_adjacent(a: int, b: int) -> bool:
        return (a, b) in dirs or (b, a) in dirs or is_undirected(a, b)

    def forced(a: int, b: int) -> bool:
        others = [c for c in range(n) if c != a and c != b]
        for c in others:
            if (c, a) in dirs and not is_adjacent(c, b):
                return True
            if (a, c) in dirs and (c, b) in dirs:
                return True
        for c in others:
            if not (is_undirected(a, c) and (c, b) in dirs):
                continue
            for d in others:
                if d != c and is_undirected(a, d) and (d, b) in dirs and not is_adjacent(c, d):
                    return True
        for c in others:
            if not is_undirected(a, c) or is_adjacent(c, b):
                continue
            for d in others:
                if d != c and (c, d) in dirs and (d, b) in dirs and is_adjacent(a, d):
                    return True
        return False

    changed = True
    while changed:
        changed = False
        for x, y in sorted(undir):
            for a, b in ((x, y), (y, x)):
                if forced(a, b):
                    undir.discard((x, y))
                    dirs.add((a, b))
                    changed = True
                    break
    return frozenset(dirs), frozenset(undir)


def cpdag_of(g: Dag) -> Cpdag:
    """
    Return the CPDAG of the Markov equivalence class of `g`.

    Edges in v-structures are directed, every other edge of the skeleton starts
    undirected, and `meek_closure` then orients the compelled ones.
    """
    directed: Set[Pair] = set()
    for i, k, j in v_structures(g):
        directed.add((i, k))
        directed.add((j, k))
    undirected = skeleton(g) - {(min(a, b), max(a, b)) for a, b in directed}
    directed_closed, undirected_closed = meek_closure(g.node_count, directed, undirected)
    return Cpdag(g.node_count, directed_closed, undirected_closed, g.node_names)


def _reaches(children: Sequence[int], source: int, target: int) -> bool:
    seen = 0
    stack = [source]
    while stack:
        v = stack.pop()
        if v == target:
            return True
        if (seen >> v) & 1:
            continue
        seen |= 1 << v
        stack.extend(iter_bits(children[v]))
    return False


def mec_members(c: Cpdag) -> List[Dag]:
    """
    Enumerate every DAG represented by `c`.

    Undirected edges are oriented one at a time in sorted order; an orientation
    is abandoned as soon as it closes a directed cycle or creates a v-structure
    absent from `c`. Members are sorted by `Dag.bit_code`.

    Raises
    ------
    CpdagError
        If no consistent extension exists.
    """
    n = c.node_count
    edges = sorted(c.undirected)
    neighbours = [0] * n
    for a, b in c.skeleton:
        neighbours[a] |= 1 << b
        neighbours[b] |= 1 << a
    parents = [0] * n
    children = [0] * n
    for a, b in c.directed:
        parents[b] |= 1 << a
        children[a] |= 1 << b

    found: List[Dag] = []

    def extend(k: int) -> None:
        if k == len(edges):
            try:
                found.append(Dag.from_edges(n, [(p, v) for v in range(n) for p in iter_bits(parents[v])], c.node_names))
            except ValueError:
                pass  # cycle among the fixed edges
            return
        x, y = edges[k]
        for a, b in ((x, y), (y, x)):
            if parents[b] & ~neighbours[a] & ~(1 << a):
                continue
            if _reaches(children, b, a):
                continue
            parents[b] |= 1 << a
            children[a] |= 1 << b
            extend(k + 1)
            parents[b] &= ~(1 << a)
            children[a] &= ~(1 << b)

    extend(0)
    if not found:
        raise CpdagError(f"{c!r} has no consistent DAG extension.")
    return sorted(found, key=lambda g: g.bit_code)


def _same_class(g: Dag, skeleton_pairs: FrozenSet[Pair], colliders: List[Tuple[int, int, int]]) -> bool:
    return skeleton(g) == skeleton_pairs and v_structures(g) == colliders


def mec_members_brute_force(c: Cpdag) -> List[Dag]:
    """Members of `c` found by filtering every labeled DAG (n <= 5); an oracle for tests."""
    skeleton_pairs = c.skeleton
    colliders = c.v_structures()
    members = [
        Dag(g.adjacency, c.node_names) for g in all_labeled_dags(c.node_count) if _same_class(g, skeleton_pairs, colliders)
    ]
    return sorted(members, key=lambda g: g.bit_code)


def essential_graph_brute_force(g: Dag) -> Cpdag:
    """
    The CPDAG of `g` computed without orientation rules (n <= 5).

    An edge is directed iff every labeled DAG with the same skeleton and
    v-structures orients it the same way.
    """
    skeleton_pairs = skeleton(g)
    colliders = v_structures(g)
    members = [h for h in all_labeled_dags(g.node_count) if _same_class(h, skeleton_pairs, colliders)]
    directed, undirected = set(), set()
    for i, j in skeleton_pairs:
        forward = {h.has_edge(i, j) for h in members}
        if forward == {True}:
            directed.add((i, j))
        elif forward == {False}:
            directed.add((j, i))
        else:
            undirected.add((i, j))
    return Cpdag(g.node_count, directed, undirected, g.node_names)


@dataclass(frozen=True)
class Mec:
    """
    A Markov equivalence class.

    Attributes
    ----------
    canonical_key : bytes
        The canonical key of the class CPDAG.
    representative : Dag
        The first enumerated DAG of the class.
    members : Tuple[Dag, ...]
        All labeled DAGs with the representative's CPDAG.
    signature : CiSignature
        The shared conditional-independence signature.
    unlabeled : Tuple[Dag, ...]
        The enumerated (unlabeled) DAGs that fell into this class.
    """

    canonical_key: CanonicalKey
    representative: Dag
    members: Tuple[Dag, ...]
    signature: CiSignature
    unlabeled: Tuple[Dag, ...] = ()

    @property
    def node_count(self) -> int:
        return self.representative.node_count

    @property
    def size(self) -> int:
        """The number of labeled member DAGs."""
        return len(self.members)

    @property
    def key_hex(self) -> str:
        """The canonical key as a hex string, as stored in records."""
        return self.canonical_key.hex()

    @property
    def cpdag(self) -> Cpdag:
        return cpdag_of(self.representative)


def group_mecs(dags: Iterable[Dag], verbose: int = 0) -> List[Mec]:
    """
    Partition DAGs into Markov equivalence classes.

    DAGs are grouped by the canonical key of their CPDAG; the first DAG of each
    group (in input order) becomes the representative. Classes are returned
    sorted by key.
    """
    groups: Dict[CanonicalKey, List[Dag]] = {}
    for g in dags:
        groups.setdefault(canonical_key(cpdag_of(g)), []).append(g)

    mecs = []
    for idx, key in enumerate(sorted(groups)):
        representative = groups[key][0]
        members = tuple(mec_members(cpdag_of(representative)))
        mecs.append(Mec(key, representative, members, ci_signature(representative), tuple(groups[key])))
        if verbose > 1:
            print(f"\rgrouped {idx + 1}/{len(groups)} classes", end="")
    if verbose > 1:
        print()
    if verbose > 0:
        n_dags = sum(len(group) for group in groups.values())
        print(f"{n_dags} DAGs fall into {len(mecs)} equivalence classes")
    return mecs
