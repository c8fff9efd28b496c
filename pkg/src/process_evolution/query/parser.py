"""Parser for the textual query language.

Grammar (keywords are case-insensitive)::

    query    := prefix* "SELECT" "DISTINCT"? ( var+ | "*" ) "WHERE"? "{" item* "}"
    prefix   := "PREFIX" name? ":" <iri>
    item     := pattern | filter
    pattern  := term term term label? "."?
    label    := "COMMON" | "ONLYBASE" | "ONLYTARGET"
    filter   := "FILTER" "(" var "=" term ")"
              | "FILTER" "regex" "(" var "," string ( "," string )? ")"
              | "FILTER" "(" "regex" "(" var "," string ( "," string )? ")" ")"
    term     := var | <iri> | name? ":" local | string ( "@" lang )?

Variables are written ``?name`` or ``$name``. Strings use the N-Triples
escapes, so a regex class like ``\\d`` is written ``"\\\\d"``. ``#`` starts
a comment that runs to the end of the line.
"""

import re
from dataclasses import dataclass

from ..comparison import VersionLabel
from ..errors import MalformedQuery
from ..graph import Iri, Literal
from ..ntriples import unescape_literal
from .model import EqualsFilter, PatternTerm, Query, RegexFilter, TriplePattern, Variable

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
    | <(?P<iri>[^<>"\s]*)>
    | "(?P<string>(?:[^"\\]|\\.)*)"(?:@(?P<lang>[a-zA-Z]+(?:-[a-zA-Z0-9]+)*))?
    | [?$](?P<var>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<pname>(?:[A-Za-z][A-Za-z0-9_-]*)?:(?:[A-Za-z0-9_\-/#%](?:[A-Za-z0-9_.\-/#%]*[A-Za-z0-9_\-/#%])?)?)
    | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<punct>[{}().,=*])
    """,
    re.VERBOSE,
)

_LABELS = {
    "COMMON": VersionLabel.COMMON,
    "ONLYBASE": VersionLabel.ONLY_BASE,
    "ONLYTARGET": VersionLabel.ONLY_TARGET,
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int
    lang: str | None = None


def tokenize(text: str) -> list[Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN.match(text, position)
        if not match:
            raise MalformedQuery(f"unexpected character {text[position]!r} at position {position}")
        kind = match.lastgroup
        if kind == "lang":
            kind = "string"
        if kind != "ws":
            value = match.group(kind)
            tokens.append(Token(kind, value, position, match.group("lang")))
        position = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0
        self.prefixes: dict[str, str] = {}

    def peek(self) -> Token | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def error(self, message: str) -> MalformedQuery:
        token = self.peek()
        where = f"at position {token.position}" if token else "at end of query"
        return MalformedQuery(f"{message} {where}")

    def next(self) -> Token:
        token = self.peek()
        if token is None:
            raise self.error("unexpected end of query")
        self.index += 1
        return token

    def at_word(self, *words: str) -> bool:
        token = self.peek()
        return token is not None and token.kind == "word" and token.text.upper() in words

    def at_punct(self, punct: str) -> bool:
        token = self.peek()
        return token is not None and token.kind == "punct" and token.text == punct

    def expect_word(self, word: str) -> None:
        if not self.at_word(word):
            raise self.error(f"expected {word}")
        self.index += 1

    def expect_punct(self, punct: str) -> None:
        if not self.at_punct(punct):
            raise self.error(f"expected '{punct}'")
        self.index += 1

    def parse(self) -> Query:
        while self.at_word("PREFIX"):
            self.index += 1
            self.parse_prefix()
        self.expect_word("SELECT")
        distinct = self.at_word("DISTINCT")
        if distinct:
            self.index += 1
        select: list[Variable] | None = []
        if self.at_punct("*"):
            self.index += 1
            select = None
        else:
            while (token := self.peek()) is not None and token.kind == "var":
                select.append(Variable(self.next().text))
            if not select:
                raise self.error("expected variables or '*' after SELECT")
        if self.at_word("WHERE"):
            self.index += 1
        self.expect_punct("{")
        patterns: list[TriplePattern] = []
        filters = []
        while not self.at_punct("}"):
            if self.at_word("FILTER"):
                self.index += 1
                filters.append(self.parse_filter())
            else:
                patterns.append(self.parse_pattern())
        self.index += 1
        if self.peek() is not None:
            raise self.error("unexpected text after '}'")
        if select is None:
            select = []
            for pattern in patterns:
                select.extend(v for v in pattern.variables() if v not in select)
        return Query(tuple(select), tuple(patterns), tuple(filters), distinct)

    def parse_prefix(self) -> None:
        token = self.next()
        if token.kind != "pname" or not token.text.endswith(":") or token.text.count(":") != 1:
            raise MalformedQuery(f"expected a prefix name at position {token.position}")
        iri = self.next()
        if iri.kind != "iri":
            raise MalformedQuery(f"expected <iri> at position {iri.position}")
        self.prefixes[token.text[:-1]] = iri.text

    def parse_term(self) -> PatternTerm:
        token = self.next()
        try:
            if token.kind == "var":
                return Variable(token.text)
            if token.kind == "iri":
                return Iri(token.text)
            if token.kind == "pname":
                prefix, _, local = token.text.partition(":")
                if prefix not in self.prefixes:
                    raise MalformedQuery(
                        f"undeclared prefix {prefix!r} at position {token.position}"
                    )
                return Iri(self.prefixes[prefix] + local)
            if token.kind == "string":
                return Literal(unescape_literal(token.text), token.lang)
        except ValueError as err:
            raise MalformedQuery(f"{err} at position {token.position}") from err
        raise MalformedQuery(f"expected a term at position {token.position}, got {token.text!r}")

    def parse_string(self) -> str:
        token = self.next()
        if token.kind != "string" or token.lang is not None:
            raise MalformedQuery(f"expected a string at position {token.position}")
        try:
            return unescape_literal(token.text)
        except ValueError as err:
            raise MalformedQuery(f"{err} at position {token.position}") from err

    def parse_variable(self) -> Variable:
        token = self.next()
        if token.kind != "var":
            raise MalformedQuery(f"expected a variable at position {token.position}")
        return Variable(token.text)

    def parse_regex_call(self) -> RegexFilter:
        self.expect_word("REGEX")
        self.expect_punct("(")
        variable = self.parse_variable()
        self.expect_punct(",")
        pattern = self.parse_string()
        flags = ""
        if self.at_punct(","):
            self.index += 1
            flags = self.parse_string()
        self.expect_punct(")")
        return RegexFilter(variable, pattern, flags)

    def parse_filter(self):
        if self.at_word("REGEX"):
            return self.parse_regex_call()
        self.expect_punct("(")
        if self.at_word("REGEX"):
            result = self.parse_regex_call()
        else:
            variable = self.parse_variable()
            self.expect_punct("=")
            term = self.parse_term()
            if isinstance(term, Variable):
                raise self.error("FILTER equality needs a concrete term")
            result = EqualsFilter(variable, term)
        self.expect_punct(")")
        return result

    def parse_pattern(self) -> TriplePattern:
        subject, predicate, obj = self.parse_term(), self.parse_term(), self.parse_term()
        label = None
        token = self.peek()
        if token is not None and token.kind == "word" and token.text.upper() in _LABELS:
            label = _LABELS[token.text.upper()]
            self.index += 1
        if self.at_punct("."):
            self.index += 1
        return TriplePattern(subject, predicate, obj, label)


def parse_query(text: str) -> Query:
    """Parse query text.

    Raises:
        MalformedQuery: On a syntax error or an invalid query structure.
    """
    return _Parser(text).parse()
