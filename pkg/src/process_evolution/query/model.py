"""Query data types: variables, triple patterns, filters and solutions."""

import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

from ..comparison import VersionLabel
from ..errors import MalformedQuery
from ..graph import Iri, Literal, Term
from ..ntriples import format_term
from .regex import compile_regex

_VARIABLE_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self) -> None:
        if not _VARIABLE_NAME.match(self.name):
            raise MalformedQuery(f"invalid variable name: {self.name!r}")

    def __str__(self) -> str:
        return f"?{self.name}"


PatternTerm = Iri | Literal | Variable


def format_pattern_term(term: PatternTerm) -> str:
    return str(term) if isinstance(term, Variable) else format_term(term)


@dataclass(frozen=True)
class TriplePattern:
    """A statement template; positions are concrete terms or variables.

    ``label`` restricts matches to statements carrying that label and is
    only meaningful against a comparison model.
    """

    subject: Iri | Variable
    predicate: Iri | Variable
    object: PatternTerm
    label: VersionLabel | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.subject, (Iri, Variable)):
            raise MalformedQuery(f"pattern subject must be an IRI or variable: {self.subject!r}")
        if not isinstance(self.predicate, (Iri, Variable)):
            raise MalformedQuery(
                f"pattern predicate must be an IRI or variable: {self.predicate!r}"
            )
        if not isinstance(self.object, (Iri, Literal, Variable)):
            raise MalformedQuery(f"invalid pattern object: {self.object!r}")

    def positions(self) -> tuple[PatternTerm, PatternTerm, PatternTerm]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> list[Variable]:
        """Distinct variables in subject, predicate, object order."""
        seen: list[Variable] = []
        for term in self.positions():
            if isinstance(term, Variable) and term not in seen:
                seen.append(term)
        return seen

    def __str__(self) -> str:
        text = " ".join(format_pattern_term(t) for t in self.positions())
        if self.label is not None:
            text += " " + self.label.name.replace("_", "")
        return text


@dataclass(frozen=True)
class EqualsFilter:
    """Holds when the variable is bound to exactly ``term``."""

    variable: Variable
    term: Term

    def holds(self, binding: Mapping[Variable, Term]) -> bool:
        return binding.get(self.variable) == self.term

    def __str__(self) -> str:
        return f"FILTER({self.variable} = {format_term(self.term)})"


@dataclass(frozen=True)
class RegexFilter:
    """Holds when the variable is bound to a literal whose lexical form matches.

    Matching has search semantics: the pattern may match anywhere unless it
    is anchored.
    """

    variable: Variable
    pattern: str
    flags: str = ""
    compiled: re.Pattern = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "compiled", compile_regex(self.pattern, self.flags))

    def holds(self, binding: Mapping[Variable, Term]) -> bool:
        value = binding.get(self.variable)
        return isinstance(value, Literal) and self.compiled.search(value.lexical) is not None

    def __str__(self) -> str:
        flags = f', "{self.flags}"' if self.flags else ""
        return f'FILTER regex({self.variable}, "{self.pattern}"{flags})'


Filter = EqualsFilter | RegexFilter


@dataclass(frozen=True)
class Query:
    """A conjunctive query: SELECT [DISTINCT] vars WHERE { patterns filters }."""

    select: tuple[Variable, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[Filter, ...] = ()
    distinct: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "select", tuple(self.select))
        object.__setattr__(self, "patterns", tuple(self.patterns))
        object.__setattr__(self, "filters", tuple(self.filters))
        variables = set(self.pattern_variables())
        for v in self.select:
            if v not in variables:
                raise MalformedQuery(f"selected variable {v} does not occur in any pattern")
        for f in self.filters:
            if f.variable not in variables:
                raise MalformedQuery(f"filter variable {f.variable} does not occur in any pattern")
        if len(set(self.select)) != len(self.select):
            raise MalformedQuery("a variable is selected twice")

    def pattern_variables(self) -> list[Variable]:
        """Distinct pattern variables in order of first occurrence."""
        seen: list[Variable] = []
        for pattern in self.patterns:
            for v in pattern.variables():
                if v not in seen:
                    seen.append(v)
        return seen


@dataclass(frozen=True)
class Solution:
    """One projected result row: (variable, term) pairs in selection order."""

    binding: tuple[tuple[Variable, Term], ...]

    def __getitem__(self, key: Variable | str) -> Term:
        name = key.name if isinstance(key, Variable) else key.lstrip("?$")
        for variable, term in self.binding:
            if variable.name == name:
                return term
        raise KeyError(key)

    def __iter__(self) -> Iterator[tuple[Variable, Term]]:
        return iter(self.binding)

    def __len__(self) -> int:
        return len(self.binding)

    def as_dict(self) -> dict[str, Term]:
        return {variable.name: term for variable, term in self.binding}

    def sort_key(self) -> tuple[str, ...]:
        return tuple(format_term(term) for _, term in self.binding)
