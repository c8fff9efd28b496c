"""Triple data model: terms, statements and immutable graphs with set semantics."""

import re
import unicodedata
from collections import defaultdict
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from functools import cached_property

from .errors import InvalidTerm

_IRI_FORBIDDEN = re.compile(r'[\s<>"]')
_LANGUAGE_TAG = re.compile(r"^[a-zA-Z]+(-[a-zA-Z0-9]+)*$")


@dataclass(frozen=True)
class Iri:
    """An IRI term. Non-empty, without whitespace or ``<>"``."""

    value: str

    def __post_init__(self) -> None:
        if not self.value:
            raise InvalidTerm("IRI must not be empty")
        if _IRI_FORBIDDEN.search(self.value):
            raise InvalidTerm(f"IRI contains whitespace or a delimiter: {self.value!r}")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Literal:
    """A plain literal with an optional language tag.

    The lexical form is stored in Unicode NFC so that equality is exact
    codepoint equality after normalization.
    """

    lexical: str
    language: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "lexical", unicodedata.normalize("NFC", self.lexical))
        if self.language is not None and not _LANGUAGE_TAG.match(self.language):
            raise InvalidTerm(f"Invalid language tag: {self.language!r}")

    def __str__(self) -> str:
        return self.lexical


Term = Iri | Literal


@dataclass(frozen=True)
class Statement:
    """One subject-predicate-object triple."""

    subject: Iri
    predicate: Iri
    object: Term

    def __post_init__(self) -> None:
        if not isinstance(self.subject, Iri):
            raise InvalidTerm(f"Statement subject must be an IRI, got {self.subject!r}")
        if not isinstance(self.predicate, Iri):
            raise InvalidTerm(f"Statement predicate must be an IRI, got {self.predicate!r}")
        if not isinstance(self.object, (Iri, Literal)):
            raise InvalidTerm(f"Statement object must be an IRI or literal, got {self.object!r}")


def _index(statements: Iterable[Statement], position: str) -> dict:
    index: dict = defaultdict(set)
    for s in statements:
        index[getattr(s, position)].add(s)
    return {key: frozenset(values) for key, values in index.items()}


@dataclass(frozen=True)
class Graph:
    """An immutable set of statements representing one model version.

    Indexes by subject, predicate and object are built lazily on first use.
    """

    statements: frozenset[Statement]

    def __init__(self, statements: Iterable[Statement] = ()):
        object.__setattr__(self, "statements", frozenset(statements))

    def __len__(self) -> int:
        return len(self.statements)

    def __iter__(self) -> Iterator[Statement]:
        return iter(self.statements)

    def __contains__(self, statement: object) -> bool:
        return statement in self.statements

    @cached_property
    def by_subject(self) -> dict[Iri, frozenset[Statement]]:
        return _index(self.statements, "subject")

    @cached_property
    def by_predicate(self) -> dict[Iri, frozenset[Statement]]:
        return _index(self.statements, "predicate")

    @cached_property
    def by_object(self) -> dict[Term, frozenset[Statement]]:
        return _index(self.statements, "object")

    def insert(self, statement: Statement) -> tuple["Graph", bool]:
        """Return a graph containing ``statement`` and whether it was new."""
        if statement in self.statements:
            return self, False
        return Graph(self.statements | {statement}), True

    def difference(self, other: "Graph") -> "Graph":
        """Statements in this graph and not in ``other``."""
        return Graph(self.statements - other.statements)

    def intersection(self, other: "Graph") -> "Graph":
        return Graph(self.statements & other.statements)

    def union(self, other: "Graph") -> "Graph":
        return Graph(self.statements | other.statements)

    def statements_with_subject(self, subject: Iri) -> frozenset[Statement]:
        """Exactly the statements whose subject equals ``subject``."""
        return self.by_subject.get(subject, frozenset())

    def subjects(self) -> set[Iri]:
        return set(self.by_subject)

    def objects(self, subject: Iri, predicate: Iri) -> set[Term]:
        """Objects of all statements with the given subject and predicate."""
        return {s.object for s in self.statements_with_subject(subject) if s.predicate == predicate}
