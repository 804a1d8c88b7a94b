"""
Corpus assembly, splitting, statistics and serialization.

The `CorpusBuilder` class is the main interface: it enumerates graphs, groups
them into equivalence classes, labels every hypothesis and verbalizes the
results into `SampleRecord` objects. Module-level functions split a corpus,
compute its statistics and read/write it as JSONL or CSV.
"""

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from causalforge.equivalence import Mec, group_mecs
from causalforge.graphs import DEFAULT_MAX_ENUMERATION_NODES, MAX_NODES, Dag, check_enumeration_budget, enumerate_dags
from causalforge.labeling import Hypothesis, RelationType, all_hypotheses, label, label_table
from causalforge.verbalizer import TemplateSet, template_set, tokenize, verbalize_premise

SPLITS = ("train", "dev", "test")
UNASSIGNED = "unassigned"
PERTURBATIONS = ("none", "paraphrase", "refactor")
FIELDS = ("id", "n_nodes", "mec_key", "pair", "relation", "premise", "hypothesis", "label", "split", "perturbation")
SPLIT_GENERATOR = "numpy.PCG64/SeedSequence(seed, n)/v1"
SPLIT_CAP = 1000
SMALL_SPLIT_LIMIT = 1000


class SchemaError(ValueError):
    """Raised when a serialized record is missing a field or holds an invalid value."""


@dataclass(frozen=True)
class SampleRecord:
    """
    One premise/hypothesis/label sample.

    The id is a pure function of (n_nodes, mec_key, pair, relation, perturbation).
    """

    id: str
    n_nodes: int
    mec_key: str
    pair: Tuple[int, int]
    relation: RelationType
    premise: str
    hypothesis: str
    label: int
    split: str = UNASSIGNED
    perturbation: str = "none"

    @staticmethod
    def make_id(n_nodes: int, mec_key: str, pair: Tuple[int, int], relation: RelationType, perturbation: str) -> str:
        return f"n{n_nodes}-{mec_key}-{pair[0]}{pair[1]}-{relation.index}-{perturbation}"

    def perturbed(self, kind: str, premise: Optional[str] = None, hypothesis: Optional[str] = None) -> "SampleRecord":
        """Return a copy with new text and perturbation tag; the id follows the tag."""
        if kind not in PERTURBATIONS:
            raise ValueError(f"Unknown perturbation '{kind}'; expected one of {', '.join(PERTURBATIONS)}.")
        return replace(
            self,
            id=self.make_id(self.n_nodes, self.mec_key, self.pair, self.relation, kind),
            premise=self.premise if premise is None else premise,
            hypothesis=self.hypothesis if hypothesis is None else hypothesis,
            perturbation=kind,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "n_nodes": self.n_nodes,
            "mec_key": self.mec_key,
            "pair": [self.pair[0], self.pair[1]],
            "relation": self.relation.value,
            "premise": self.premise,
            "hypothesis": self.hypothesis,
            "label": self.label,
            "split": self.split,
            "perturbation": self.perturbation,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SampleRecord":
        """
        Build a record from a JSONL object or a CSV row.

        Raises
        ------
        SchemaError
            Naming the first missing or invalid field.
        """
        for name in FIELDS:
            if name not in data:
                raise SchemaError(f"Record is missing the field '{name}'.")

        n_nodes = _as_int(data, "n_nodes")
        label_value = _as_int(data, "label")
        if label_value not in (0, 1):
            raise SchemaError(f"Field 'label' must be 0 or 1, got {data['label']!r}.")

        pair = data["pair"]
        if isinstance(pair, str):
            pair = pair.split(",")
        try:
            i, j = (int(v) for v in pair)
        except (TypeError, ValueError) as e:
            raise SchemaError(f"Field 'pair' must hold two indices, got {data['pair']!r}.") from e
        if i == j or not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise SchemaError(f"Field 'pair' holds an invalid pair {data['pair']!r} for {n_nodes} nodes.")

        try:
            relation = RelationType.from_value(data["relation"])
        except ValueError as e:
            raise SchemaError(f"Field 'relation' is invalid: {e}") from e
        if data["split"] not in SPLITS + (UNASSIGNED,):
            raise SchemaError(f"Field 'split' has an unknown value {data['split']!r}.")
        if data["perturbation"] not in PERTURBATIONS:
            raise SchemaError(f"Field 'perturbation' has an unknown value {data['perturbation']!r}.")
        for name in ("id", "mec_key", "premise", "hypothesis"):
            if not isinstance(data[name], str) or not data[name]:
                raise SchemaError(f"Field '{name}' must be a non-empty string.")

        return cls(
            id=data["id"],
            n_nodes=n_nodes,
            mec_key=data["mec_key"],
            pair=(i, j),
            relation=relation,
            premise=data["premise"],
            hypothesis=data["hypothesis"],
            label=label_value,
            split=data["split"],
            perturbation=data["perturbation"],
        )


def _as_int(data: Mapping[str, Any], name: str) -> int:
    value = data[name]
    if isinstance(value, bool):
        raise SchemaError(f"Field '{name}' must be an integer, got {value!r}.")
    if isinstance(value, int):
        return value
    if isinstance(value, str) and value.strip().lstrip("-").isdigit():
        return int(value)
    raise SchemaError(f"Field '{name}' must be an integer, got {value!r}.")


def _records_for_mec(mec: Mec, templates: TemplateSet) -> List[SampleRecord]:
    """Label and verbalize all hypotheses of one class. Module level so worker processes can run it."""
    n = mec.node_count
    names = mec.representative.node_names
    premise = verbalize_premise(mec.signature, names).text
    table = label_table(mec)
    key = mec.key_hex
    records = []
    for h in all_hypotheses(n):
        pair = (h.i, h.j)
        records.append(
            SampleRecord(
                id=SampleRecord.make_id(n, key, pair, h.relation, "none"),
                n_nodes=n,
                mec_key=key,
                pair=pair,
                relation=h.relation,
                premise=premise,
                hypothesis=templates.render(h, names),
                label=int(table[h.relation.index, h.i, h.j]),
            )
        )
    return records


class CorpusBuilder:
    """
    Builds labeled premise/hypothesis corpora from enumerated causal graphs.

    Enumerations and equivalence classes are cached per node count, so one
    builder can serve several `build` calls and label checks.

    Parameters
    ----------
    max_nodes : int, optional
        The enumeration cap. Defaults to 6; can be raised up to 8.
    templates : TemplateSet, optional
        Hypothesis templates. Defaults to the built-in default set.
    jobs : int, optional
        Worker processes used to verbalize classes. Defaults to 1.
    verbose : int, optional
        Verbosity level (0 for silent). Defaults to 0.
    """

    def __init__(
        self,
        max_nodes: int = DEFAULT_MAX_ENUMERATION_NODES,
        templates: Optional[TemplateSet] = None,
        jobs: int = 1,
        verbose: int = 0,
    ):
        if not 2 <= max_nodes <= MAX_NODES:
            raise ValueError(f"max_nodes must be between 2 and {MAX_NODES}, got {max_nodes}.")
        if jobs < 1:
            raise ValueError(f"jobs must be a positive integer, got {jobs}.")
        self._max_nodes = max_nodes
        self._templates = templates if templates is not None else template_set("default")
        self._jobs = jobs
        self._verbose = verbose

        self._mecs: Dict[int, List[Mec]] = {}
        self._mec_index: Dict[int, Dict[str, Mec]] = {}
        self._build_stats: Dict[int, Dict[str, float]] = {}

    @property
    def config(self) -> Dict[str, Union[int, str]]:
        """The builder settings."""
        return {
            "max_nodes": self._max_nodes,
            "template_style": self._templates.style,
            "jobs": self._jobs,
        }

    @property
    def templates(self) -> TemplateSet:
        return self._templates

    @property
    def build_stats(self) -> Dict[int, Dict[str, float]]:
        """
        Per-node-count diagnostics of the last builds.

        Returns
        -------
        Dict[int, Dict[str, float]]
            For each n: 'dags', 'mecs', 'member_dags', 'max_class_size',
            'records' and 'seconds'.
        """
        return self._build_stats

    def dags(self, n: int) -> List[Dag]:
        return enumerate_dags(n, max_nodes=self._max_nodes)

    def mecs(self, n: int) -> List[Mec]:
        """The equivalence classes of all n-node DAGs, sorted by key."""
        if n not in self._mecs:
            self._mecs[n] = group_mecs(self.dags(n), verbose=self._verbose)
        return self._mecs[n]

    def mec_index(self, n: int) -> Dict[str, Mec]:
        """The classes of n-node DAGs keyed by their hex canonical key."""
        if n not in self._mec_index:
            self._mec_index[n] = {mec.key_hex: mec for mec in self.mecs(n)}
        return self._mec_index[n]

    def build(self, n_min: int, n_max: int) -> List[SampleRecord]:
        """
        Build every record for node counts n_min..n_max.

        Returns
        -------
        List[SampleRecord]
            Unsplit records sorted by id.

        Raises
        ------
        ValueError
            If the range is empty, starts below 2, exceeds `max_nodes` or
            needs an enumeration beyond the resource limit.
        """
        if not 2 <= n_min <= n_max:
            raise ValueError(f"Invalid node range {n_min}..{n_max}; need 2 <= n_min <= n_max.")
        if n_max > self._max_nodes:
            raise ValueError(f"n_max={n_max} exceeds the configured maximum of {self._max_nodes} nodes.")
        check_enumeration_budget(n_max)

        records: List[SampleRecord] = []
        for n in range(n_min, n_max + 1):
            start = time.perf_counter()
            mecs = self.mecs(n)
            if self._verbose > 0:
                print(f"CorpusBuilder.build(): n={n}, {len(mecs)} classes, verbalizing...")
            if self._jobs > 1:
                with ProcessPoolExecutor(max_workers=self._jobs) as pool:
                    chunks = list(pool.map(_records_for_mec, mecs, [self._templates] * len(mecs), chunksize=16))
            else:
                chunks = []
                for idx, mec in enumerate(mecs):
                    chunks.append(_records_for_mec(mec, self._templates))
                    if self._verbose > 1:
                        print(f"\r  class {idx + 1}/{len(mecs)}", end="")
                if self._verbose > 1:
                    print()
            produced = sum(len(chunk) for chunk in chunks)
            for chunk in chunks:
                records.extend(chunk)
            self._build_stats[n] = {
                "dags": len(self.dags(n)),
                "mecs": len(mecs),
                "member_dags": sum(mec.size for mec in mecs),
                "max_class_size": max(mec.size for mec in mecs),
                "records": produced,
                "seconds": round(time.perf_counter() - start, 3),
            }
            if self._verbose > 0:
                print(f"CorpusBuilder.build(): n={n} produced {produced} records")
        records.sort(key=lambda r: r.id)
        return records

    def verify_labels(self, records: Sequence[SampleRecord], fraction: float = 0.01, seed: int = 0) -> int:
        """
        Recompute the labels of a random sample of records from their class keys.

        Returns
        -------
        int
            The number of records checked.

        Raises
        ------
        ValueError
            On an unknown class key or a label mismatch.
        """
        if not 0 < fraction <= 1:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}.")
        if not records:
            return 0
        rng = np.random.Generator(np.random.PCG64(seed))
        count = max(1, int(round(len(records) * fraction)))
        picked = rng.choice(len(records), size=min(count, len(records)), replace=False)
        for idx in np.sort(picked):
            record = records[int(idx)]
            mec = self.mec_index(record.n_nodes).get(record.mec_key)
            if mec is None:
                raise ValueError(f"Record {record.id} refers to an unknown class key {record.mec_key}.")
            expected = label(mec, Hypothesis(record.relation, record.pair[0], record.pair[1]))
            if expected != record.label:
                raise ValueError(f"Record {record.id} has label {record.label}, recomputed {expected}.")
        return len(picked)


# --- Splitting ----------------------------------------------------------------


def split_sizes(count: int) -> Tuple[int, int, int]:
    """
    The (test, dev, train) sizes for one node count.

    Fewer than 1,000 records are shared between test and dev (test takes the
    odd one out); otherwise test and dev each get min(1,000, 10%).
    """
    if count < SMALL_SPLIT_LIMIT:
        test = count - count // 2
        return test, count // 2, 0
    k = min(SPLIT_CAP, count // 10)
    return k, k, count - 2 * k


def _split_rng(seed: int, n: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(n,))))


def split(records: Sequence[SampleRecord], seed: int = 0) -> List[SampleRecord]:
    """
    Assign train/dev/test splits per node count from one seeded shuffle each.

    The input order is kept; only the `split` field changes.
    """
    by_n: Dict[int, List[int]] = {}
    for idx, record in enumerate(records):
        by_n.setdefault(record.n_nodes, []).append(idx)

    assigned = list(records)
    for n, indices in sorted(by_n.items()):
        order = _split_rng(seed, n).permutation(len(indices))
        n_test, n_dev, _ = split_sizes(len(indices))
        for rank, pos in enumerate(order):
            name = "test" if rank < n_test else "dev" if rank < n_test + n_dev else "train"
            idx = indices[int(pos)]
            assigned[idx] = replace(records[idx], split=name)
    return assigned


# --- Statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class SubsetStats:
    samples: int = 0
    test: int = 0
    dev: int = 0
    train: int = 0
    premise_tokens: float = 0.0
    hypothesis_tokens: float = 0.0
    valid_percent: float = 0.0
    vocab_size: int = 0

    def to_dict(self) -> Dict[str, Union[int, float]]:
        return {
            "samples": self.samples,
            "test": self.test,
            "dev": self.dev,
            "train": self.train,
            "premise_tokens": round(self.premise_tokens, 2),
            "hypothesis_tokens": round(self.hypothesis_tokens, 2),
            "valid_percent": round(self.valid_percent, 2),
            "vocab_size": self.vocab_size,
        }


@dataclass(frozen=True)
class CorpusStats:
    """Corpus statistics per node count and overall."""

    overall: SubsetStats = field(default_factory=SubsetStats)
    by_nodes: Dict[int, SubsetStats] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "overall": self.overall.to_dict(),
            "by_nodes": {str(n): s.to_dict() for n, s in sorted(self.by_nodes.items())},
        }


def _subset_stats(records: Sequence[SampleRecord], token_cache: Dict[str, List[str]]) -> SubsetStats:
    if not records:
        return SubsetStats()

    def tokens(text: str) -> List[str]:
        if text not in token_cache:
            token_cache[text] = tokenize(text)
        return token_cache[text]

    vocab = set()
    premise_lengths = np.empty(len(records))
    hypothesis_lengths = np.empty(len(records))
    for k, r in enumerate(records):
        premise_lengths[k] = len(tokens(r.premise))
        hypothesis_lengths[k] = len(tokens(r.hypothesis))
    for text in {r.premise for r in records} | {r.hypothesis for r in records}:
        vocab.update(tokens(text))
    splits = [r.split for r in records]
    return SubsetStats(
        samples=len(records),
        test=splits.count("test"),
        dev=splits.count("dev"),
        train=splits.count("train"),
        premise_tokens=float(np.mean(premise_lengths)),
        hypothesis_tokens=float(np.mean(hypothesis_lengths)),
        valid_percent=100.0 * sum(r.label for r in records) / len(records),
        vocab_size=len(vocab),
    )


def stats(records: Sequence[SampleRecord]) -> CorpusStats:
    """Compute sample, split, token, label and vocabulary statistics under `tokenize`."""
    token_cache: Dict[str, List[str]] = {}
    by_n: Dict[int, List[SampleRecord]] = {}
    for r in records:
        by_n.setdefault(r.n_nodes, []).append(r)
    return CorpusStats(
        overall=_subset_stats(records, token_cache),
        by_nodes={n: _subset_stats(rs, token_cache) for n, rs in sorted(by_n.items())},
    )


def graph_stats(n_min: int, n_max: int, builder: Optional[CorpusBuilder] = None) -> Dict[str, Dict[str, float]]:
    """
    Source-graph statistics per node count plus a "total" row.

    Returns
    -------
    Dict[str, Dict[str, float]]
        Keys are str(n) and "total"; each row holds 'dags', 'edges_per_dag',
        'mecs' and 'dags_per_mec'.
    """
    builder = builder if builder is not None else CorpusBuilder(max_nodes=max(n_max, 2))
    rows: Dict[str, Dict[str, float]] = {}
    total_dags = total_edges = total_mecs = 0
    for n in range(n_min, n_max + 1):
        dags = builder.dags(n)
        edges = sum(g.edge_count for g in dags)
        mecs = len(builder.mecs(n))
        rows[str(n)] = {
            "dags": len(dags),
            "edges_per_dag": edges / len(dags),
            "mecs": mecs,
            "dags_per_mec": len(dags) / mecs,
        }
        total_dags += len(dags)
        total_edges += edges
        total_mecs += mecs
    rows["total"] = {
        "dags": total_dags,
        "edges_per_dag": total_edges / total_dags,
        "mecs": total_mecs,
        "dags_per_mec": total_dags / total_mecs,
    }
    return rows


# --- Serialization ------------------------------------------------------------


def write_records(records: Iterable[SampleRecord], path: Union[str, Path], fmt: str = "jsonl") -> None:
    """Write records as UTF-8 JSONL (one object per line) or CSV, with LF line endings."""
    path = Path(path)
    if fmt == "jsonl":
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")
    elif fmt == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=FIELDS, lineterminator="\n")
            writer.writeheader()
            for r in records:
                row = r.to_dict()
                row["pair"] = f"{r.pair[0]},{r.pair[1]}"
                writer.writerow(row)
    else:
        raise ValueError(f"Unknown record format '{fmt}'; expected jsonl or csv.")


def read_records(path: Union[str, Path], fmt: Optional[str] = None) -> List[SampleRecord]:
    """
    Read records written by `write_records`; the format defaults to the file suffix.

    Raises
    ------
    SchemaError
        On malformed lines or fields, with the line number.
    """
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    records = []
    if fmt == "jsonl":
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaError(f"{path}:{line_no}: invalid JSON: {e}") from e
                if not isinstance(data, dict):
                    raise SchemaError(f"{path}:{line_no}: expected a JSON object.")
                records.append(_from_line(data, path, line_no))
    elif fmt == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            for line_no, row in enumerate(csv.DictReader(fh), start=2):
                records.append(_from_line(row, path, line_no))
    else:
        raise ValueError(f"Unknown record format '{fmt}'; expected jsonl or csv.")
    return records


def _from_line(data: Mapping[str, Any], path: Path, line_no: int) -> SampleRecord:
    try:
        return SampleRecord.from_dict(data)
    except SchemaError as e:
        raise SchemaError(f"{path}:{line_no}: {e}") from e


def write_stats(corpus_stats: CorpusStats, path: Union[str, Path]) -> None:
    """Write a JSON report mirroring `CorpusStats`."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(corpus_stats.to_dict(), fh, indent=2)
        fh.write("\n")
