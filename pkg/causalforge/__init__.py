"""
Causal Forge Package.

This package enumerates causal graphs, groups them into Markov equivalence
classes and turns every class into labeled premise/hypothesis samples for
testing causal inference from correlation statements.

The main components exposed are:
- CorpusBuilder: Builds, caches and verifies corpora per node count.
- Dag: An immutable labeled directed acyclic graph.
- Cpdag: The partially directed summary of an equivalence class.
- CiSignature: The conditional independences of a graph.
- pc: Causal discovery from an independence oracle.
"""

__version__ = "0.1.0"

from .dataset import CorpusBuilder, SampleRecord, split, stats
from .discovery import IndependenceOracle, pc
from .equivalence import Cpdag, Mec, cpdag_of, mec_members
from .graphs import Dag, enumerate_dags
from .independence import CiSignature, ci_signature
from .labeling import Hypothesis, RelationType
