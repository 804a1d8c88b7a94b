"""
The PC algorithm over an exact conditional-independence oracle.
"""

import itertools
from typing import Dict, FrozenSet, Iterable, Optional, Set, Tuple, Union

from causalforge import equivalence
from causalforge.equivalence import Cpdag
from causalforge.graphs import upper_pairs
from causalforge.independence import CiSignature

Pair = Tuple[int, int]


class FaithfulnessError(ValueError):
    """Raised when oracle answers lead to contradictory edge orientations."""


class IndependenceOracle:
    """
    Answers independence queries from a `CiSignature` and counts them.

    Parameters
    ----------
    signature : CiSignature
        The ground-truth independences.
    """

    def __init__(self, signature: CiSignature):
        self._signature = signature
        self._query_count = 0

    @property
    def node_count(self) -> int:
        return self._signature.node_count

    @property
    def query_count(self) -> int:
        """The number of `is_independent` calls answered so far."""
        return self._query_count

    def is_independent(self, i: int, j: int, z: Iterable[int] = ()) -> bool:
        self._query_count += 1
        return self._signature.is_independent(i, j, z)


def pc(
    oracle: IndependenceOracle,
    n: Optional[int] = None,
    return_sepsets: bool = False,
    verbose: int = 0,
) -> Union[Cpdag, Tuple[Cpdag, Dict[Pair, FrozenSet[int]]]]:
    """
    Recover a CPDAG from independence queries.

    The skeleton phase starts from the complete graph and removes an edge
    i - j as soon as some Z drawn from the other nodes separates the pair,
    trying conditioning sets in increasing size. The first separating set is
    recorded. Unshielded triples i - k - j with k outside that set become
    colliders i -> k <- j, and `meek_closure` orients the rest.

    Parameters
    ----------
    oracle : IndependenceOracle
        The independence source.
    n : int, optional
        The number of variables; defaults to the oracle's.
    return_sepsets : bool, optional
        Also return the recorded separating sets.
    verbose : int, optional
        Print a summary line when positive.

    Raises
    ------
    FaithfulnessError
        If a collider would reverse an edge that an earlier collider oriented.
    """
    if n is None:
        n = oracle.node_count
    if n != oracle.node_count:
        raise ValueError(f"The oracle covers {oracle.node_count} variables, not {n}.")

    adjacent: Set[Pair] = set(upper_pairs(n))
    sepsets: Dict[Pair, FrozenSet[int]] = {}
    for size in range(n - 1):
        for i, j in sorted(adjacent):
            others = [v for v in range(n) if v != i and v != j]
            for z in itertools.combinations(others, size):
                if oracle.is_independent(i, j, z):
                    adjacent.discard((i, j))
                    sepsets[(i, j)] = frozenset(z)
                    break

    directed: Set[Pair] = set()
    undirected: Set[Pair] = set(adjacent)

    def orient(a: int, b: int) -> None:
        if (b, a) in directed:
            raise FaithfulnessError(f"Conflicting orientations for the edge between {a} and {b}.")
        undirected.discard((min(a, b), max(a, b)))
        directed.add((a, b))

    for (i, j), z in sorted(sepsets.items()):
        for k in range(n):
            if k in (i, j) or k in z:
                continue
            if (min(i, k), max(i, k)) in adjacent and (min(j, k), max(j, k)) in adjacent:
                orient(i, k)
                orient(j, k)

    directed_closed, undirected_closed = equivalence.meek_closure(n, directed, undirected)
    result = Cpdag(n, directed_closed, undirected_closed)
    if verbose > 0:
        print(
            f"pc: {len(adjacent)} adjacencies, {len(directed_closed)} directed, "
            f"{oracle.query_count} oracle queries"
        )
    if return_sepsets:
        return result, sepsets
    return result
