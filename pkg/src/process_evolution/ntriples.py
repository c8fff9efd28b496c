"""Line-oriented graph serialization and parsing.

Each statement is one line::

    <subject> <predicate> <object> .
    <subject> <predicate> "literal"@lang .

The canonical form sorts lines lexicographically, so equal graphs always
serialize to identical bytes.
"""

import re

from .errors import InvalidTerm, ParseError
from .graph import Graph, Iri, Literal, Statement, Term

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\t": "\\t", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t", "r": "\r"}

_IRI = r"<([^<>\"\s]+)>"
_LITERAL = r'"((?:[^"\\]|\\.)*)"(?:@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*))?'
_STATEMENT = re.compile(rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LITERAL})\s*\.\s*$")
LITERAL_TOKEN = re.compile(_LITERAL)


def escape_literal(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape_literal(text: str) -> str:
    """Reverse escape_literal.

    Raises:
        ValueError: On an unknown escape sequence.
    """
    if "\\" not in text:
        return text
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\":
            if i + 1 >= len(text) or text[i + 1] not in _UNESCAPES:
                raise ValueError(f"invalid escape sequence at offset {i}")
            out.append(_UNESCAPES[text[i + 1]])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def format_term(term: Term) -> str:
    """Serialize a single term."""
    if isinstance(term, Iri):
        return f"<{term.value}>"
    suffix = f"@{term.language}" if term.language else ""
    return f'"{escape_literal(term.lexical)}"{suffix}'


def format_statement(statement: Statement) -> str:
    """Serialize a statement as one line (without the newline)."""
    return (
        f"{format_term(statement.subject)} {format_term(statement.predicate)} "
        f"{format_term(statement.object)} ."
    )


def _diagnose(line: str) -> str:
    """Best-effort description of why a line does not parse."""
    stripped = line.strip()
    quotes = len(re.findall(r'(?<!\\)"', stripped))
    if quotes % 2 == 1:
        return "unterminated literal"
    outside = re.sub(r'"(?:[^"\\]|\\.)*"', '""', stripped)
    if outside.count("<") != outside.count(">"):
        return "bad IRI delimiters"
    if not stripped.endswith("."):
        return "missing terminating '.'"
    if len(outside.split()) < 4:
        return "missing terms"
    return "malformed statement"


def parse_statement(line: str, line_number: int = 1, source: str | None = None) -> Statement:
    """Parse one statement line.

    Raises:
        ParseError: If the line does not encode exactly one statement.
    """
    match = _STATEMENT.match(line)
    if not match:
        raise ParseError(line_number, _diagnose(line), source)
    subject, predicate, obj_iri, lexical, language = match.groups()
    try:
        if obj_iri is not None:
            obj: Term = Iri(obj_iri)
        else:
            obj = Literal(unescape_literal(lexical), language)
        return Statement(Iri(subject), Iri(predicate), obj)
    except (ValueError, InvalidTerm) as err:
        raise ParseError(line_number, str(err), source) from err


def is_skippable(line: str) -> bool:
    """Blank lines and ``#`` comments carry no statement."""
    stripped = line.strip()
    return not stripped or stripped.startswith("#")


def parse_graph(text: str, source: str | None = None) -> Graph:
    """Parse a document into a graph; duplicate lines collapse.

    Args:
        text: The document.
        source: Optional file name used in error messages.

    Raises:
        ParseError: On the first malformed line.
    """
    statements = set()
    # split on "\n" only: a raw "\r" or U+2028 inside a literal is not a line break
    for number, line in enumerate(text.split("\n"), start=1):
        if is_skippable(line):
            continue
        statements.add(parse_statement(line, number, source))
    return Graph(statements)


def serialize_graph(graph: Graph) -> str:
    """Canonical serialization: one sorted line per statement."""
    lines = sorted(format_statement(s) for s in graph)
    return "".join(line + "\n" for line in lines)
