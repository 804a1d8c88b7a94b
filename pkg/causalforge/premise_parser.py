"""
Premise text parsing.

This module provides the `PremiseParser` class, which uses `pyparsing` to read
a verbalized premise back into its variable names and `CiSignature`. It is the
inverse of `verbalizer.verbalize_premise` and accepts variable names in any
order, so it also reads premises whose names were refactored.
"""

from typing import Any, Dict, List, NamedTuple, Tuple

import pyparsing as pp

from causalforge.independence import CiSignature

pp.ParserElement.enablePackrat()


class ParsedPremise(NamedTuple):
    names: Tuple[str, ...]
    signature: CiSignature


def _phrase(text: str) -> pp.ParserElement:
    return pp.Suppress(pp.And([pp.Keyword(word) for word in text.split()]))


class StatementTransformer:
    """
    Parse actions turning matched statements into plain tuples.

    - correlation: `("correlates", a, b)`
    - independence: `("independent", a, b, (z1, z2, ...))`
    """

    @staticmethod
    def transform_correlation(tokens: pp.ParseResults) -> Any:
        return "correlates", tokens[0], tokens[1]

    @staticmethod
    def transform_independence(tokens: pp.ParseResults) -> Any:
        given = tuple(tokens[2]) if len(tokens) > 2 else ()
        return "independent", tokens[0], tokens[1], given


class PremiseParser:
    """
    Parses premise strings into variable names and a `CiSignature`.

    The grammar mirrors the fixed premise layout: a preamble naming the
    variables, followed by one sentence per correlated pair or per
    (pair, separating set).
    """

    def __init__(self):
        self._transformer = StatementTransformer()
        self._preamble, self._grammar = self._build_grammar()

    def _build_grammar(self) -> Tuple[pp.ParserElement, pp.ParserElement]:
        """
        Construct the preamble and the full premise grammars.

        Returns
        -------
        Tuple[pp.ParserElement, pp.ParserElement]
            The preamble-only element and the complete premise element.
        """
        comma, period, colon = pp.Suppress(","), pp.Suppress("."), pp.Suppress(":")
        and_ = pp.Keyword("and")
        given = pp.Keyword("given")
        integer = pp.Word(pp.nums).setParseAction(lambda t: int(t[0]))

        # Names are identifiers; the list separators are reserved.
        name = ~(and_ | given) + pp.Word(pp.alphas + "_", pp.alphanums + "_")
        name_list = pp.Group(name + pp.ZeroOrMore(comma + name) + pp.Optional(pp.Suppress(and_) + name))

        preamble = (
            _phrase("Suppose there is a closed system of")
            + integer("count")
            + _phrase("variables")
            + comma
            + name_list("names")
            + period
            + _phrase("All the statistical relations among these")
            + integer("repeat_count")
            + _phrase("variables are as follows")
            + colon
        )

        correlation = name + _phrase("correlates with") + name + period
        correlation.setParseAction(self._transformer.transform_correlation)

        independence = name + _phrase("is independent of") + name + pp.Optional(pp.Suppress(given) + name_list) + period
        independence.setParseAction(self._transformer.transform_independence)

        statements = pp.Group(pp.ZeroOrMore(correlation | independence))("statements")
        return preamble, preamble + statements + pp.StringEnd()

    def parse_names(self, text: str) -> Tuple[str, ...]:
        """
        Read only the variable names declared in the preamble.

        Raises
        ------
        ValueError
            If the text does not start with a well-formed preamble.
        """
        try:
            result = self._preamble.parseString(text, parseAll=False)
        except pp.ParseException as e:
            raise ValueError(f"Invalid premise preamble: {e}") from e
        names = tuple(result["names"])
        if result["count"] != len(names) or result["repeat_count"] != len(names):
            raise ValueError(f"Premise declares {result['count']} variables but names {len(names)}.")
        if len(set(names)) != len(names):
            raise ValueError(f"Premise declares duplicate variable names: {list(names)}.")
        return names

    def parse(self, text: str) -> ParsedPremise:
        """
        Parse a premise and rebuild its signature.

        Raises
        ------
        ValueError
            If the text is empty or malformed, mentions undeclared variables,
            or does not describe every pair exactly one way.
        """
        if not text:
            raise ValueError("Cannot parse an empty premise.")
        try:
            result = self._grammar.parseString(text, parseAll=True)
        except pp.ParseException as e:
            raise ValueError(f"Invalid premise syntax: {e}") from e

        names = self.parse_names(text)
        index = {name: k for k, name in enumerate(names)}

        def lookup(name: str) -> int:
            if name not in index:
                raise ValueError(f"Variable '{name}' is not declared in the premise.")
            return index[name]

        correlated = set()
        separating: Dict[Tuple[int, int], List[Tuple[int, ...]]] = {}
        for statement in result["statements"]:
            i, j = lookup(statement[1]), lookup(statement[2])
            if i == j:
                raise ValueError(f"Statement relates '{statement[1]}' to itself.")
            pair = (min(i, j), max(i, j))
            if statement[0] == "correlates":
                correlated.add(pair)
            else:
                z = tuple(lookup(v) for v in statement[3])
                if len(set(z)) != len(z) or i in z or j in z:
                    raise ValueError(f"Invalid conditioning set {list(statement[3])} for '{statement[1]}', '{statement[2]}'.")
                separating.setdefault(pair, []).append(z)

        n = len(names)
        for i in range(n):
            for j in range(i + 1, n):
                if (i, j) in correlated and (i, j) in separating:
                    raise ValueError(f"Pair '{names[i]}', '{names[j]}' is both correlated and independent.")
                if (i, j) not in correlated and (i, j) not in separating:
                    raise ValueError(f"Pair '{names[i]}', '{names[j]}' is not described by the premise.")
        return ParsedPremise(names, CiSignature(n, separating))
