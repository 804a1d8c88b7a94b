"""
Natural-language rendering of premises and hypotheses.

Premises list every correlation and conditional independence of a class
signature; hypotheses are rendered from one template per relation type. The
module also implements the two test-time perturbations (paraphrased
hypotheses and refactored variable names) and the tokenizer used for corpus
statistics.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List, Mapping, Optional, Sequence, Union

from causalforge.graphs import default_names
from causalforge.independence import CiSignature
from causalforge.labeling import Hypothesis, RelationType
from causalforge.premise_parser import ParsedPremise, PremiseParser

if TYPE_CHECKING:
    from causalforge.dataset import SampleRecord

DEFAULT_TEMPLATES: Dict[RelationType, str] = {
    RelationType.IS_PARENT: "{i} directly causes {j}.",
    RelationType.IS_ANCESTOR: "{i} causes something else which causes {j}.",
    RelationType.IS_CHILD: "{j} directly causes {i}.",
    RelationType.IS_DESCENDANT: "{j} is a cause for {i}, but not a direct one.",
    RelationType.HAS_COLLIDER: "There exists at least one collider (i.e., common effect) of {i} and {j}.",
    RelationType.HAS_CONFOUNDER: "There exists at least one confounder (i.e., common cause) of {i} and {j}.",
}

PARAPHRASE_TEMPLATES: Dict[RelationType, str] = {
    RelationType.IS_PARENT: "{i} directly affects {j}.",
    RelationType.IS_ANCESTOR: "{i} influences {j} through some mediator(s).",
    RelationType.IS_CHILD: "{j} directly affects {i}.",
    RelationType.IS_DESCENDANT: "{j} influences {i} through some mediator(s).",
    RelationType.HAS_COLLIDER: "{i} and {j} together cause some other variable(s).",
    RelationType.HAS_CONFOUNDER: "Some variable(s) cause(s) both {i} and {j}.",
}

TEMPLATE_STYLES = ("default", "paraphrase")

# Refactoring swaps each early letter with its mirror at the end of the alphabet.
REFACTOR_MAP: Dict[str, str] = {}
for _early, _late in zip("ABCDEF", "ZYXWVU"):
    REFACTOR_MAP[_early] = _late
    REFACTOR_MAP[_late] = _early

_TOKEN = re.compile(r"[^\s.,;:()]+|[.,;:()]")
_WORD = re.compile(r"[^\s.,;:()]+")
_NAME = re.compile(r"[A-Z]")

_parser = PremiseParser()


@dataclass(frozen=True)
class PremiseText:
    text: str

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class TemplateSet:
    """
    One template per relation type.

    Every template must contain the placeholders `{i}` and `{j}` exactly once.
    """

    style: str
    templates: Mapping[RelationType, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.style not in TEMPLATE_STYLES:
            raise ValueError(f"Unknown template style '{self.style}'; expected one of {', '.join(TEMPLATE_STYLES)}.")
        missing = [r.value for r in RelationType if r not in self.templates]
        if missing:
            raise ValueError(f"Template set '{self.style}' has no template for {', '.join(missing)}.")
        for relation, template in self.templates.items():
            if template.count("{i}") != 1 or template.count("{j}") != 1:
                raise ValueError(f"Template for {relation.value} must contain {{i}} and {{j}} exactly once: {template!r}")

    def render(self, h: Hypothesis, names: Sequence[str]) -> str:
        template = self.templates[h.relation]
        return template.replace("{i}", names[h.i]).replace("{j}", names[h.j])


def template_set(style: str = "default") -> TemplateSet:
    """Return the built-in template set of a style ("default" or "paraphrase")."""
    if style == "paraphrase":
        return TemplateSet("paraphrase", dict(PARAPHRASE_TEMPLATES))
    return TemplateSet(style, dict(DEFAULT_TEMPLATES))


def load_templates(path: Union[str, Path], style: str = "default") -> TemplateSet:
    """
    Load template overrides from a text file.

    Each non-empty line not starting with '#' reads `Relation-Name=template`.
    Relations that are not listed keep the built-in template of `style`.

    Raises
    ------
    ValueError
        On malformed lines, unknown relation names or invalid templates.
    """
    templates = dict(template_set(style).templates)
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{line_no}: expected 'Relation-Name=template', got {line!r}.")
        templates[RelationType.from_value(key.strip())] = value.strip()
    return TemplateSet(style, templates)


def join_names(names: Sequence[str]) -> str:
    """Join names as "A", "A and B" or "A, B and C"."""
    if len(names) <= 2:
        return " and ".join(names)
    return ", ".join(names[:-1]) + " and " + names[-1]


def join_condition(names: Sequence[str]) -> str:
    """Join a conditioning set as "B", "B and C" or "B, C, D"."""
    if len(names) <= 2:
        return " and ".join(names)
    return ", ".join(names)


def preamble(names: Sequence[str]) -> str:
    n = len(names)
    return (
        f"Suppose there is a closed system of {n} variables, {join_names(names)}. "
        f"All the statistical relations among these {n} variables are as follows:"
    )


def verbalize_premise(sig: CiSignature, names: Optional[Sequence[str]] = None) -> PremiseText:
    """
    Render a signature as a premise.

    Pairs are listed in lexicographic order. A pair without separating sets
    reads "X correlates with Y."; otherwise one sentence is emitted per
    separating set, with the conditioning names in alphabetical order.
    """
    names = default_names(sig.node_count) if names is None else tuple(names)
    if len(names) != sig.node_count:
        raise ValueError(f"Expected {sig.node_count} names, got {len(names)}.")
    sentences = [preamble(names)]
    for i, j in sig.pairs():
        a, b = names[i], names[j]
        sets = sig.separating_sets(i, j)
        if not sets:
            sentences.append(f"{a} correlates with {b}.")
            continue
        for z in sets:
            if z:
                given = join_condition(sorted(names[v] for v in z))
                sentences.append(f"{a} is independent of {b} given {given}.")
            else:
                sentences.append(f"{a} is independent of {b}.")
    return PremiseText(" ".join(sentences))


def verbalize_hypothesis(h: Hypothesis, names: Sequence[str], t: Optional[TemplateSet] = None) -> str:
    """Render a hypothesis with a template set (default templates when omitted)."""
    if t is None:
        t = template_set("default")
    return t.render(h, names)


def parse_premise(text: str) -> ParsedPremise:
    """Recover the variable names and signature of a premise."""
    return _parser.parse(text)


def premise_names(text: str) -> List[str]:
    """Read the variable names declared by a premise preamble."""
    return list(_parser.parse_names(text))


def recognize_hypothesis(text: str, names: Sequence[str], t: Optional[TemplateSet] = None) -> List[Hypothesis]:
    """
    Find the hypotheses a template set renders as `text`.

    Several readings are possible: with the default templates Is-Child(i, j)
    and Is-Parent(j, i) produce the same sentence.

    Returns
    -------
    List[Hypothesis]
        The matches in (i, j, relation) order.

    Raises
    ------
    ValueError
        If no relation and ordered pair of `names` produces `text`.
    """
    if t is None:
        t = template_set("default")
    n = len(names)
    found = [
        Hypothesis(relation, i, j)
        for i in range(n)
        for j in range(n)
        if i != j
        for relation in RelationType
        if t.render(Hypothesis(relation, i, j), names) == text
    ]
    if not found:
        raise ValueError(f"Hypothesis {text!r} does not match any {t.style} template.")
    return found


def is_template_fragment(ngram: Sequence[str], t: Optional[TemplateSet] = None) -> bool:
    """
    Return True iff the word n-gram occurs in a hypothesis template.

    Single capital letters stand for variable names and match the `{i}`/`{j}`
    slots; at least one token must be template wording.
    """
    if t is None:
        t = template_set("default")

    def slot(token: str) -> str:
        return "{}" if _NAME.fullmatch(token) or token in ("{i}", "{j}") else token

    mapped = [slot(token) for token in ngram]
    if not mapped or all(token == "{}" for token in mapped):
        return False
    for template in t.templates.values():
        words = [slot(token) for token in word_tokens(template)]
        for k in range(len(words) - len(mapped) + 1):
            if words[k : k + len(mapped)] == mapped:
                return True
    return False


def tokenize(text: str) -> List[str]:
    """Split text into words and the punctuation marks . , ; : ( )"""
    return _TOKEN.findall(text)


def word_tokens(text: str) -> List[str]:
    """Like `tokenize`, without punctuation tokens."""
    return _WORD.findall(text)


def paraphrase(sample: "SampleRecord", templates: Optional[TemplateSet] = None) -> "SampleRecord":
    """
    Re-render the hypothesis of an unperturbed record with paraphrase templates.

    Premise, label, pair and relation stay the same.

    Raises
    ------
    ValueError
        If the record is already perturbed or its hypothesis does not come
        from the default templates.
    """
    if sample.perturbation != "none":
        raise ValueError(f"Record {sample.id} is already perturbed ({sample.perturbation}).")
    if templates is None:
        templates = template_set("paraphrase")
    names = premise_names(sample.premise)
    h = Hypothesis(sample.relation, sample.pair[0], sample.pair[1])
    if h not in recognize_hypothesis(sample.hypothesis, names):
        raise ValueError(f"Hypothesis of record {sample.id} does not match its relation {sample.relation.value}.")
    return sample.perturbed("paraphrase", hypothesis=templates.render(h, names))


def refactor_variables(sample: "SampleRecord") -> "SampleRecord":
    """
    Swap variable names A<->Z, B<->Y, C<->X, D<->W, E<->V, F<->U everywhere.

    The mapping is its own inverse, so refactoring a refactored record
    restores the original text and its "none" perturbation tag.

    Raises
    ------
    ValueError
        If the record was paraphrased or uses names outside the mapping.
    """
    if sample.perturbation == "paraphrase":
        raise ValueError(f"Record {sample.id} is paraphrased and cannot be refactored.")
    names = premise_names(sample.premise)
    unknown = [name for name in names if name not in REFACTOR_MAP]
    if unknown:
        raise ValueError(f"Variable names {unknown} cannot be refactored.")
    pattern = re.compile(r"\b(" + "|".join(re.escape(name) for name in names) + r")\b")

    def swap(text: str) -> str:
        return pattern.sub(lambda m: REFACTOR_MAP[m.group(1)], text)

    kind = "none" if sample.perturbation == "refactor" else "refactor"
    return sample.perturbed(kind, premise=swap(sample.premise), hypothesis=swap(sample.hypothesis))
