"""
Scoring, random baselines and n-gram/label PMI analysis.

All metrics are percentages for the positive class (label 1, a valid
hypothesis). Prediction files are JSONL objects `{"id": ..., "label": 0|1}`.
"""

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from causalforge.dataset import SampleRecord
from causalforge.labeling import RelationType
from causalforge.verbalizer import word_tokens

BASELINES = ("majority", "uniform", "proportional")
TEXT_FIELDS = ("premise", "hypothesis")


class PredictionError(ValueError):
    """Raised for unknown or duplicate prediction ids and non-binary labels."""


@dataclass(frozen=True)
class Metrics:
    f1: float
    precision: float
    recall: float
    accuracy: float

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class PmiRow:
    ngram: Tuple[str, ...]
    pmi_neg: float
    pmi_pos: float
    abs_diff: float

    @property
    def text(self) -> str:
        return " ".join(self.ngram)


def _binary(value: Any, where: str) -> int:
    if isinstance(value, bool) or value not in (0, 1):
        raise PredictionError(f"{where}: label must be 0 or 1, got {value!r}.")
    return int(value)


def _paired(predictions: Iterable[Mapping[str, Any]], gold: Sequence[SampleRecord]) -> List[Tuple[SampleRecord, int]]:
    by_id = {r.id: r for r in gold}
    seen = set()
    pairs = []
    for p in predictions:
        if "id" not in p or "label" not in p:
            raise PredictionError(f"Prediction {dict(p)!r} needs both 'id' and 'label'.")
        pid = p["id"]
        if pid not in by_id:
            raise PredictionError(f"Prediction id '{pid}' is not in the gold set.")
        if pid in seen:
            raise PredictionError(f"Prediction id '{pid}' appears more than once.")
        seen.add(pid)
        pairs.append((by_id[pid], _binary(p["label"], f"prediction '{pid}'")))
    return pairs


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> Metrics:
    """Positive-class precision, recall and F1 plus accuracy, in percent; empty ratios are 0."""
    total = tp + fp + fn + tn
    precision = 100.0 * tp / (tp + fp) if tp + fp else 0.0
    recall = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = 100.0 * (tp + tn) / total if total else 0.0
    return Metrics(f1=f1, precision=precision, recall=recall, accuracy=accuracy)


def _confusion(pairs: Iterable[Tuple[SampleRecord, int]]) -> Tuple[int, int, int, int]:
    tp = fp = fn = tn = 0
    for record, predicted in pairs:
        if predicted and record.label:
            tp += 1
        elif predicted:
            fp += 1
        elif record.label:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def score(predictions: Iterable[Mapping[str, Any]], gold: Sequence[SampleRecord]) -> Metrics:
    """
    Score predictions against gold records.

    Only the predicted ids are scored.

    Raises
    ------
    PredictionError
        On unknown or duplicate ids and non-binary labels.
    """
    return metrics_from_confusion(*_confusion(_paired(predictions, gold)))


def score_by_relation(
    predictions: Iterable[Mapping[str, Any]], gold: Sequence[SampleRecord]
) -> Dict[RelationType, Metrics]:
    """Metrics per relation type, over the relations that have predictions."""
    grouped: Dict[RelationType, List[Tuple[SampleRecord, int]]] = {}
    for record, predicted in _paired(predictions, gold):
        grouped.setdefault(record.relation, []).append((record, predicted))
    return {r: metrics_from_confusion(*_confusion(grouped[r])) for r in RelationType if r in grouped}


def baseline(
    kind: str, gold: Sequence[SampleRecord], seed: int = 0, positive_rate: Optional[float] = None
) -> List[Dict[str, Any]]:
    """
    Random or constant predictions for `gold`.

    Parameters
    ----------
    kind : str
        "majority" predicts the majority label (of `positive_rate` if given,
        else of `gold`), "uniform" flips a fair coin, "proportional" predicts
        1 with probability `positive_rate`.
    gold : Sequence[SampleRecord]
        The records to predict.
    seed : int, optional
        Seed of the numpy generator.
    positive_rate : float, optional
        The dev-set positive rate in [0, 1]; required for "proportional".
    """
    if kind not in BASELINES:
        raise ValueError(f"Unknown baseline '{kind}'; expected one of {', '.join(BASELINES)}.")
    if not gold:
        raise ValueError("Cannot build a baseline for an empty gold set.")
    if positive_rate is not None and not 0.0 <= positive_rate <= 1.0:
        raise ValueError(f"positive_rate must be within [0, 1], got {positive_rate}.")

    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "majority":
        rate = positive_rate if positive_rate is not None else float(np.mean([r.label for r in gold]))
        labels = np.full(len(gold), int(rate > 0.5))
    elif kind == "uniform":
        labels = rng.integers(0, 2, size=len(gold))
    else:
        if positive_rate is None:
            raise ValueError("The proportional baseline needs the dev-set positive_rate.")
        labels = (rng.random(len(gold)) < positive_rate).astype(int)
    return [{"id": r.id, "label": int(v)} for r, v in zip(gold, labels)]


# --- PMI ----------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _ngrams(text: str, max_len: int) -> FrozenSet[Tuple[str, ...]]:
    words = word_tokens(text)
    return frozenset(tuple(words[k : k + size]) for size in range(1, max_len + 1) for k in range(len(words) - size + 1))


def _pmi(count_label: int, count: int, n_label: int, n_total: int) -> float:
    return math.log((count_label + 1) * (n_total + 2) / ((count + 2) * (n_label + 1)))


def pmi_table(
    records: Sequence[SampleRecord],
    max_len: int = 4,
    min_count: int = 1,
    fields: Sequence[str] = TEXT_FIELDS,
) -> List[PmiRow]:
    """
    Pointwise mutual information between each n-gram and each label.

    A sample contributes every distinct n-gram of its selected fields once,
    and n-grams never cross from one field into another. With add-one
    smoothing the PMI of n-gram g with label l is

        log[(c_l + 1) * (N + 2) / ((c + 2) * (N_l + 1))]

    where c is the number of samples containing g, c_l those with label l, N
    the number of samples and N_l those with label l. An n-gram present in
    every sample scores 0 for both labels.

    Returns
    -------
    List[PmiRow]
        Sorted by abs_diff descending, then by n-gram text.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be at least 1, got {max_len}.")
    unknown = [f for f in fields if f not in TEXT_FIELDS]
    if not fields or unknown:
        raise ValueError(f"fields must be taken from {TEXT_FIELDS}, got {list(fields)}.")
    if not records:
        return []

    n_total = len(records)
    n_pos = sum(r.label for r in records)
    n_neg = n_total - n_pos

    total: Counter = Counter()
    positive: Counter = Counter()

    # The first field is counted once per distinct text; the others per sample,
    # skipping n-grams already present in the first field.
    lead, rest = fields[0], fields[1:]
    tallies: Dict[str, List[int]] = {}
    for r in records:
        text = getattr(r, lead)
        tally = tallies.setdefault(text, [0, 0])
        tally[0] += 1
        tally[1] += r.label
        if rest:
            lead_grams = _ngrams(text, max_len)
            extra = set()
            for name in rest:
                extra |= _ngrams(getattr(r, name), max_len)
            for gram in extra - lead_grams:
                total[gram] += 1
                positive[gram] += r.label
    for text, (count, pos) in tallies.items():
        for gram in _ngrams(text, max_len):
            total[gram] += count
            positive[gram] += pos

    rows = []
    for gram, count in total.items():
        if count < min_count:
            continue
        pos = positive[gram]
        pmi_pos = _pmi(pos, count, n_pos, n_total)
        pmi_neg = _pmi(count - pos, count, n_neg, n_total)
        rows.append(PmiRow(gram, pmi_neg, pmi_pos, abs(pmi_neg - pmi_pos)))
    rows.sort(key=lambda row: (-row.abs_diff, row.text))
    return rows


# --- Files --------------------------------------------------------------------


def read_predictions(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """Read a JSONL prediction file."""
    predictions = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as e:
                raise PredictionError(f"{path}:{line_no}: invalid JSON: {e}") from e
            if not isinstance(data, dict):
                raise PredictionError(f"{path}:{line_no}: expected a JSON object.")
            predictions.append(data)
    return predictions


def write_predictions(predictions: Iterable[Mapping[str, Any]], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for p in predictions:
            fh.write(json.dumps({"id": p["id"], "label": p["label"]}) + "\n")


def write_metrics(metrics: Metrics, path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(metrics.to_dict(), fh, indent=2)
        fh.write("\n")


def write_pmi_tsv(rows: Iterable[PmiRow], path: Union[str, Path], top: Optional[int] = None) -> None:
    """Write PMI rows as TSV with the header ngram/pmi_neg/pmi_pos/abs_diff."""
    rows = list(rows)
    if top is not None:
        rows = rows[:top]
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("ngram\tpmi_neg\tpmi_pos\tabs_diff\n")
        for row in rows:
            fh.write(f"{row.text}\t{row.pmi_neg:.6f}\t{row.pmi_pos:.6f}\t{row.abs_diff:.6f}\n")
