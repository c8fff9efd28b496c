"""Tests for the line-based statement format."""

import pytest
from hypothesis import given, settings

from process_evolution.errors import ParseError
from process_evolution.graph import Graph, Iri, Literal, Statement
from process_evolution.ntriples import (
    escape_literal,
    format_statement,
    format_term,
    parse_graph,
    parse_statement,
    serialize_graph,
    unescape_literal,
)

from strategies import graphs, lexical_forms


class TestEscaping:
    """Tests for literal escaping."""

    def test_escapes(self):
        """Backslash, quote and line breaks are escaped."""
        assert escape_literal('a\\b"c\nd\te\rf') == 'a\\\\b\\"c\\nd\\te\\rf'

    def test_unknown_escape(self):
        """Unknown escape sequences are rejected."""
        with pytest.raises(ValueError):
            unescape_literal("\\q")
        with pytest.raises(ValueError):
            unescape_literal("trailing\\")

    @given(lexical_forms)
    def test_escape_inverse(self, text):
        """unescape_literal reverses escape_literal."""
        assert unescape_literal(escape_literal(text)) == text


class TestFormat:
    """Tests for term and statement formatting."""

    def test_format_terms(self):
        """IRIs are bracketed; literals are quoted with an optional tag."""
        assert format_term(Iri("urn:a")) == "<urn:a>"
        assert format_term(Literal("x")) == '"x"'
        assert format_term(Literal("x", "de")) == '"x"@de'

    def test_format_statement(self):
        """One statement per line, terminated by ' .'."""
        s = Statement(Iri("urn:a"), Iri("urn:p"), Literal('say "hi"'))
        assert format_statement(s) == '<urn:a> <urn:p> "say \\"hi\\"" .'


class TestParse:
    """Tests for parsing statements and documents."""

    def test_parse_statement(self):
        """Literal objects keep their language tag."""
        s = parse_statement('<urn:a> <urn:p> "Plan"@en .')
        assert s == Statement(Iri("urn:a"), Iri("urn:p"), Literal("Plan", "en"))

    def test_parse_tolerates_spacing(self):
        """Extra blanks between terms are allowed."""
        assert parse_statement("  <urn:a>   <urn:p>\t<urn:o>.  ").object == Iri("urn:o")

    def test_comments_and_blank_lines(self):
        """Comment and blank lines carry no statements."""
        graph = parse_graph("# header\n\n<urn:a> <urn:p> <urn:o> .\n   \n")
        assert len(graph) == 1

    def test_duplicate_lines_collapse(self):
        """Repeated lines yield one statement."""
        line = "<urn:a> <urn:p> <urn:o> .\n"
        assert len(parse_graph(line * 3)) == 1

    @pytest.mark.parametrize(
        ("text", "reason"),
        [
            ('<urn:a> <urn:p> "open .', "unterminated literal"),
            ("<urn:a> <urn:p <urn:o> .", "bad IRI delimiters"),
            ("<urn:a> <urn:p> <urn:o>", "missing terminating '.'"),
            ("<urn:a> <urn:p> .", "missing terms"),
        ],
    )
    def test_diagnostics(self, text, reason):
        """Malformed lines name the problem and the line number."""
        with pytest.raises(ParseError) as excinfo:
            parse_graph("<urn:ok> <urn:p> <urn:o> .\n" + text, source="g.nt")
        assert excinfo.value.line_number == 2
        assert reason in str(excinfo.value)
        assert "g.nt" in str(excinfo.value)

    def test_literal_subject_is_error(self):
        """A literal subject is not a statement."""
        with pytest.raises(ParseError):
            parse_statement('"a" <urn:p> <urn:o> .')

    def test_bad_escape_is_parse_error(self):
        """Invalid escapes inside literals are reported as parse errors."""
        with pytest.raises(ParseError):
            parse_statement('<urn:a> <urn:p> "\\x" .')


class TestSerialize:
    """Tests for canonical serialization."""

    def test_sorted_lines(self):
        """Lines are sorted and newline-terminated."""
        graph = Graph(
            [
                Statement(Iri("urn:b"), Iri("urn:p"), Iri("urn:o")),
                Statement(Iri("urn:a"), Iri("urn:p"), Iri("urn:o")),
            ]
        )
        assert serialize_graph(graph) == "<urn:a> <urn:p> <urn:o> .\n<urn:b> <urn:p> <urn:o> .\n"

    def test_empty_graph(self):
        """The empty graph serializes to the empty document."""
        assert serialize_graph(Graph()) == ""
        assert parse_graph("") == Graph()

    def test_line_separator_in_literal(self):
        """Unicode line separators inside literals do not split lines."""
        graph = Graph([Statement(Iri("urn:a"), Iri("urn:p"), Literal("one\u2028two\x85three"))])
        assert parse_graph(serialize_graph(graph)) == graph

    @settings(max_examples=300)
    @given(graphs)
    def test_round_trip(self, graph):
        """Parsing a serialized graph gives the same graph."""
        text = serialize_graph(graph)
        assert parse_graph(text) == graph
        assert serialize_graph(parse_graph(text)) == text
