"""
Labeled DAGs, canonical keys and enumeration up to isomorphism.

This module provides the immutable `Dag` value type, a bit-matrix adjacency over
named variables, together with the graph-level operations the rest of the
package is built on:

- `canonical_key`, a permutation-invariant key for directed, undirected and
  mixed graphs (an undirected edge is stored as a pair of opposite arcs),
- `enumerate_dags`, one upper-triangular representative per isomorphism class,
- `kin`, the parents/children/ancestors/descendants of a node,
- edge-list and DOT exports for debugging.
"""

import itertools
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

MAX_NODES = 8
DEFAULT_MAX_ENUMERATION_NODES = 6
# Upper-triangular masks visited by `enumerate_dags`; 2 ** 15 is the 6-node case.
ENUMERATION_MASK_LIMIT = 1 << 15

CanonicalKey = bytes


def default_names(n: int) -> Tuple[str, ...]:
    """Return the default variable labels "A", "B", ... for `n` nodes."""
    return tuple(chr(ord("A") + i) for i in range(n))


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the positions of the set bits of `mask` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def upper_pairs(n: int) -> List[Tuple[int, int]]:
    """Return the (i, j) pairs with i < j in row-major order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class Kin(NamedTuple):
    """The direct and transitive neighbourhood of a node."""

    parents: FrozenSet[int]
    children: FrozenSet[int]
    ancestors: FrozenSet[int]
    descendants: FrozenSet[int]


class Dag:
    """
    An immutable labeled directed acyclic graph.

    Parameters
    ----------
    adjacency : array_like
        A square boolean matrix; entry (i, j) is True iff there is an edge Xi -> Xj.
    node_names : Sequence[str], optional
        Distinct variable labels, one per node. Defaults to "A", "B", ...

    Raises
    ------
    ValueError
        If the matrix is not square, has more than `MAX_NODES` nodes, contains a
        self-loop or a directed cycle, or if the names are not distinct.
    """

    def __init__(self, adjacency, node_names: Optional[Sequence[str]] = None):
        matrix = np.array(adjacency, dtype=bool)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Adjacency must be a square matrix, got shape {matrix.shape}.")
        n = matrix.shape[0]
        if not 1 <= n <= MAX_NODES:
            raise ValueError(f"A Dag needs between 1 and {MAX_NODES} nodes, got {n}.")
        if matrix.diagonal().any():
            raise ValueError("A Dag cannot contain self-loops.")

        names = default_names(n) if node_names is None else tuple(node_names)
        if len(names) != n or len(set(names)) != n:
            raise ValueError(f"Expected {n} distinct node names, got {list(names)}.")

        matrix.setflags(write=False)
        self._adjacency = matrix
        self._names: Tuple[str, ...] = names
        self._parent_masks: Tuple[int, ...] = tuple(_column_mask(matrix, k) for k in range(n))
        self._child_masks: Tuple[int, ...] = tuple(_row_mask(matrix, k) for k in range(n))

        order = _topological_order(self._parent_masks, self._child_masks)
        if order is None:
            raise ValueError("The adjacency matrix contains a directed cycle.")
        self._topological_order: Tuple[int, ...] = order

        ancestors = [0] * n
        for v in order:
            for p in iter_bits(self._parent_masks[v]):
                ancestors[v] |= (1 << p) | ancestors[p]
        descendants = [0] * n
        for v in reversed(order):
            for c in iter_bits(self._child_masks[v]):
                descendants[v] |= (1 << c) | descendants[c]
        self._ancestor_masks: Tuple[int, ...] = tuple(ancestors)
        self._descendant_masks: Tuple[int, ...] = tuple(descendants)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]], node_names: Optional[Sequence[str]] = None) -> "Dag":
        """Build a Dag on `n` nodes from (i, j) index pairs."""
        matrix = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            matrix[i, j] = True
        return cls(matrix, node_names)

    @classmethod
    def from_mask(cls, n: int, mask: int, node_names: Optional[Sequence[str]] = None) -> "Dag":
        """
        Build an upper-triangular Dag from a bit mask.

        Bit k of `mask` switches on the k-th pair of `upper_pairs(n)`.
        """
        pairs = upper_pairs(n)
        if not 0 <= mask < (1 << len(pairs)):
            raise ValueError(f"Mask {mask} is out of range for {n} nodes.")
        return cls.from_edges(n, (pairs[k] for k in iter_bits(mask)), node_names)

    @property
    def node_count(self) -> int:
        """The number of nodes N."""
        return len(self._names)

    @property
    def adjacency(self) -> np.ndarray:
        """The read-only N x N boolean adjacency matrix."""
        return self._adjacency

    @property
    def incidence(self) -> np.ndarray:
        """The arc matrix used by `canonical_key`; equal to the adjacency for a Dag."""
        return self._adjacency

    @property
    def node_names(self) -> Tuple[str, ...]:
        """The ordered variable labels."""
        return self._names

    @property
    def topological_order(self) -> Tuple[int, ...]:
        """A topological order of the nodes (smallest index first among ready nodes)."""
        return self._topological_order

    @property
    def edges(self) -> Tuple[Tuple[int, int], ...]:
        """All edges (i, j) in row-major order."""
        rows, cols = np.nonzero(self._adjacency)
        return tuple(zip(rows.tolist(), cols.tolist()))

    @property
    def edge_count(self) -> int:
        """The number of directed edges."""
        return int(self._adjacency.sum())

    @property
    def bit_code(self) -> int:
        """An integer encoding of the adjacency, bit i*N+j set iff i -> j."""
        n = self.node_count
        return sum(1 << (i * n + j) for i, j in self.edges)

    def has_edge(self, i: int, j: int) -> bool:
        """Return True iff the edge i -> j is present."""
        return bool(self._adjacency[i, j])

    def adjacent(self, i: int, j: int) -> bool:
        """Return True iff i and j are joined by an edge in either direction."""
        return bool(self._adjacency[i, j] or self._adjacency[j, i])

    def parent_mask(self, k: int) -> int:
        """The parents of node k as a bit mask."""
        return self._parent_masks[k]

    def child_mask(self, k: int) -> int:
        """The children of node k as a bit mask."""
        return self._child_masks[k]

    def ancestor_mask(self, k: int) -> int:
        """The ancestors of node k as a bit mask, parents included."""
        return self._ancestor_masks[k]

    def descendant_mask(self, k: int) -> int:
        """The descendants of node k as a bit mask, children included."""
        return self._descendant_masks[k]

    def relabel(self, perm: Sequence[int]) -> "Dag":
        """
        Return the isomorphic Dag in which node i is moved to position perm[i].

        Node names stay attached to positions, so the result carries the same
        `node_names` as this graph.
        """
        n = self.node_count
        if sorted(perm) != list(range(n)):
            raise ValueError(f"{list(perm)} is not a permutation of {n} nodes.")
        matrix = np.zeros((n, n), dtype=bool)
        for i, j in self.edges:
            matrix[perm[i], perm[j]] = True
        return Dag(matrix, self._names)

    def to_networkx(self) -> nx.DiGraph:
        """Return a networkx DiGraph on nodes 0..N-1 with a `name` attribute."""
        graph = nx.DiGraph()
        graph.add_nodes_from((k, {"name": name}) for k, name in enumerate(self._names))
        graph.add_edges_from(self.edges)
        return graph

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dag):
            return NotImplemented
        return self._names == other._names and np.array_equal(self._adjacency, other._adjacency)

    def __hash__(self) -> int:
        return hash((self._names, self._adjacency.tobytes()))

    def __repr__(self) -> str:
        return f"Dag({to_edge_list(self)!r}, n={self.node_count})"


def _row_mask(matrix: np.ndarray, k: int) -> int:
    return sum(1 << int(j) for j in np.flatnonzero(matrix[k, :]))


def _column_mask(matrix: np.ndarray, k: int) -> int:
    return sum(1 << int(i) for i in np.flatnonzero(matrix[:, k]))


def _topological_order(parent_masks: Sequence[int], child_masks: Sequence[int]) -> Optional[Tuple[int, ...]]:
    """Kahn's algorithm over bit masks; returns None when a cycle exists."""
    n = len(parent_masks)
    remaining = list(parent_masks)
    placed = 0
    order = []
    while len(order) < n:
        ready = [v for v in range(n) if not (placed >> v) & 1 and remaining[v] == 0]
        if not ready:
            return None
        v = ready[0]
        order.append(v)
        placed |= 1 << v
        for c in iter_bits(child_masks[v]):
            remaining[c] &= ~(1 << v)
    return tuple(order)


def is_acyclic(matrix: np.ndarray) -> bool:
    """Return True iff the boolean arc matrix has no directed cycle (self-loops count as cycles)."""
    matrix = np.asarray(matrix, dtype=bool)
    if matrix.diagonal().any():
        return False
    n = matrix.shape[0]
    parents = [_column_mask(matrix, k) for k in range(n)]
    children = [_row_mask(matrix, k) for k in range(n)]
    return _topological_order(parents, children) is not None


def kin(g: Dag, node: int) -> Kin:
    """
    Return the parents, children, ancestors and descendants of `node`.

    Ancestors include the parents and descendants include the children.

    Raises
    ------
    ValueError
        If `node` is not a valid index of `g`.
    """
    if not 0 <= node < g.node_count:
        raise ValueError(f"Node index {node} is out of range for a graph with {g.node_count} nodes.")
    return Kin(
        parents=frozenset(iter_bits(g.parent_mask(node))),
        children=frozenset(iter_bits(g.child_mask(node))),
        ancestors=frozenset(iter_bits(g.ancestor_mask(node))),
        descendants=frozenset(iter_bits(g.descendant_mask(node))),
    )


# --- Canonical labeling -------------------------------------------------------


@lru_cache(maxsize=None)
def _permutation_tables(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Precompute, for every permutation of n nodes, the source coordinates of the
    off-diagonal entries of the permuted matrix, plus the bit weights.

    Position a of a permuted graph holds original node perm[a], so entry (a, b)
    of the permuted matrix is M[perm[a], perm[b]].
    """
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)
    positions = [(a, b) for a in range(n) for b in range(n) if a != b]
    row_pos = np.array([a for a, _ in positions], dtype=np.intp)
    col_pos = np.array([b for _, b in positions], dtype=np.intp)
    rows = perms[:, row_pos]
    cols = perms[:, col_pos]
    # Most significant bit first, so integer order equals lexicographic bit-string order.
    m = len(positions)
    weights = np.array([1 << (m - 1 - k) for k in range(m)], dtype=np.uint64)
    return perms, rows, cols, weights


def _canonical_code(matrix: np.ndarray) -> int:
    n = matrix.shape[0]
    if n == 1:
        return 0
    perms, rows, cols, weights = _permutation_tables(n)

    # Degree-sequence prefilter: only relabelings that list nodes in
    # non-decreasing (out-degree, in-degree) order are candidates.
    signature = matrix.sum(axis=1) * (n + 1) + matrix.sum(axis=0)
    ordered = signature[perms]
    keep = np.all(ordered[:, :-1] <= ordered[:, 1:], axis=1)

    bits = matrix[rows[keep], cols[keep]].astype(np.uint64)
    codes = (bits * weights).sum(axis=1, dtype=np.uint64)
    return int(codes.min())


def canonical_key(g) -> CanonicalKey:
    """
    Return a key that identifies a graph up to node relabeling.

    Accepts a `Dag`, a `Cpdag` (anything exposing an `incidence` arc matrix in
    which an undirected edge appears as two opposite arcs) or a raw square
    boolean matrix. The key is the node count byte followed by the minimum,
    over all degree-ordered relabelings, of the off-diagonal bit string of the
    arc matrix.

    Returns
    -------
    bytes
        Equal for two graphs iff some node permutation maps one onto the other.
    """
    matrix = np.asarray(getattr(g, "incidence", g), dtype=bool)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or not 1 <= n <= MAX_NODES:
        raise ValueError(f"Cannot compute a canonical key for a matrix of shape {matrix.shape}.")
    width = max(1, (n * (n - 1) + 7) // 8)
    return bytes([n]) + _canonical_code(matrix).to_bytes(width, "big")


# --- Enumeration --------------------------------------------------------------


@lru_cache(maxsize=None)
def _enumerate(n: int) -> Tuple[Dag, ...]:
    pairs = upper_pairs(n)
    rows = np.array([i for i, _ in pairs], dtype=np.intp)
    cols = np.array([j for _, j in pairs], dtype=np.intp)
    representatives = {}
    for mask in range(1 << len(pairs)):
        on = np.array([(mask >> k) & 1 for k in range(len(pairs))], dtype=bool)
        matrix = np.zeros((n, n), dtype=bool)
        matrix[rows[on], cols[on]] = True
        key = canonical_key(matrix)
        if key not in representatives:
            representatives[key] = matrix
    return tuple(Dag(representatives[key]) for key in sorted(representatives))


def enumerate_dags(n: int, max_nodes: int = DEFAULT_MAX_ENUMERATION_NODES) -> List[Dag]:
    """
    Enumerate all DAGs on `n` unlabeled nodes, one representative per class.

    Only upper-triangular adjacency masks are visited (every DAG has a
    topological relabeling), and masks are deduplicated by `canonical_key`.
    The representative of a class is its first mask in ascending mask order;
    the result is sorted by canonical key.

    Parameters
    ----------
    n : int
        The number of nodes.
    max_nodes : int, optional
        The configured enumeration cap. Defaults to 6.

    Raises
    ------
    ValueError
        If `n` is outside 1..min(max_nodes, MAX_NODES), or the enumeration
        would exceed `ENUMERATION_MASK_LIMIT`.
    """
    cap = min(max_nodes, MAX_NODES)
    if not 1 <= n <= cap:
        raise ValueError(f"Cannot enumerate DAGs on {n} nodes; allowed range is 1..{cap}.")
    check_enumeration_budget(n)
    return list(_enumerate(n))


def check_enumeration_budget(n: int) -> None:
    """
    Raise if enumerating `n`-node DAGs would visit more than `ENUMERATION_MASK_LIMIT` masks.

    Raises
    ------
    ValueError
        With the number of masks the enumeration would need.
    """
    masks = 1 << (n * (n - 1) // 2)
    if masks > ENUMERATION_MASK_LIMIT:
        raise ValueError(
            f"Enumerating DAGs on {n} nodes needs {masks:,} adjacency masks, "
            f"above the resource limit of {ENUMERATION_MASK_LIMIT:,}."
        )


def all_labeled_dags(n: int) -> Iterator[Dag]:
    """
    Yield every labeled DAG on `n` nodes (brute force, n <= 5).

    Each unordered pair is independently absent, forward or backward; cyclic
    orientations are skipped. Used as an oracle in tests and checks.
    """
    if not 1 <= n <= 5:
        raise ValueError(f"Brute-force labeled enumeration is limited to 1..5 nodes, got {n}.")
    pairs = upper_pairs(n)
    for states in itertools.product((0, 1, 2), repeat=len(pairs)):
        matrix = np.zeros((n, n), dtype=bool)
        for (i, j), state in zip(pairs, states):
            if state == 1:
                matrix[i, j] = True
            elif state == 2:
                matrix[j, i] = True
        if is_acyclic(matrix):
            yield Dag(matrix)


# --- Debug export -------------------------------------------------------------


def _arcs(g) -> Tuple[List[Tuple[int, int]], List[Tuple[int, int]]]:
    matrix = np.asarray(g.incidence, dtype=bool)
    directed, undirected = [], []
    for i, j in zip(*np.nonzero(matrix)):
        i, j = int(i), int(j)
        if matrix[j, i]:
            if i < j:
                undirected.append((i, j))
        else:
            directed.append((i, j))
    return directed, undirected


def to_edge_list(g) -> str:
    """Render a graph as "A->B;B->C" (undirected edges as "A--B")."""
    names = g.node_names
    directed, undirected = _arcs(g)
    parts = [f"{names[i]}->{names[j]}" for i, j in directed]
    parts += [f"{names[i]}--{names[j]}" for i, j in undirected]
    return ";".join(parts)


def to_dot(g, graph_name: str = "G") -> str:
    """Render a graph in DOT format; undirected edges carry `dir=none`."""
    names = g.node_names
    directed, undirected = _arcs(g)
    lines = [f"digraph {graph_name} {{"]
    lines += [f'  "{name}";' for name in names]
    lines += [f'  "{names[i]}" -> "{names[j]}";' for i, j in directed]
    lines += [f'  "{names[i]}" -> "{names[j]}" [dir=none];' for i, j in undirected]
    lines.append("}")
    return "\n".join(lines)
