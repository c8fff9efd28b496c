"""Tests for the triple data model."""

import pytest
from hypothesis import given

from process_evolution.errors import InvalidTerm
from process_evolution.graph import Graph, Iri, Literal, Statement

from strategies import graphs, statements


class TestTerms:
    """Tests for Iri and Literal validation."""

    @pytest.mark.parametrize("value", ["", "urn:a b", "urn:<a>", 'urn:"a"', "urn:a\tb"])
    def test_invalid_iri(self, value):
        """IRIs must be non-empty and free of whitespace and delimiters."""
        with pytest.raises(InvalidTerm):
            Iri(value)

    def test_invalid_term_is_value_error(self):
        """Term errors can be caught as ValueError."""
        with pytest.raises(ValueError):
            Iri("")

    def test_literal_is_nfc_normalized(self):
        """Decomposed and composed forms of the same text are one literal."""
        assert Literal("Cafe\u0301") == Literal("Caf\u00e9")
        assert Literal("Cafe\u0301").lexical == "Caf\u00e9"

    def test_language_tag_distinguishes_literals(self):
        """The same text with and without a language tag differs."""
        assert Literal("plan") != Literal("plan", "en")

    @pytest.mark.parametrize("tag", ["", "en_US", "1en", "en-"])
    def test_invalid_language_tag(self, tag):
        """Malformed language tags are rejected."""
        with pytest.raises(InvalidTerm):
            Literal("x", tag)

    def test_literal_subject_rejected(self):
        """Statements need IRI subjects and predicates."""
        with pytest.raises(InvalidTerm):
            Statement(Literal("x"), Iri("urn:p"), Iri("urn:o"))
        with pytest.raises(InvalidTerm):
            Statement(Iri("urn:s"), Literal("p"), Iri("urn:o"))


class TestGraph:
    """Tests for Graph set semantics and indexes."""

    def test_duplicates_collapse(self, triple):
        """A graph is a set of statements."""
        s = triple("a", "p", "b")
        assert len(Graph([s, s])) == 1

    def test_insert_reports_novelty(self, triple):
        """insert returns the same graph when the statement is present."""
        s = triple("a", "p", "b")
        graph, added = Graph().insert(s)
        assert added and s in graph
        same, added_again = graph.insert(s)
        assert not added_again and same is graph

    def test_graph_is_immutable(self, triple):
        """insert leaves the original graph unchanged."""
        original = Graph()
        original.insert(triple("a", "p", "b"))
        assert len(original) == 0

    def test_statements_with_subject(self, triple):
        """Only statements with the exact subject are returned."""
        graph = Graph(
            [triple("a", "p", "b"), triple("a", "q", Literal("x")), triple("b", "p", "a")]
        )
        found = graph.statements_with_subject(Iri("urn:x:a"))
        assert found == {triple("a", "p", "b"), triple("a", "q", Literal("x"))}
        assert graph.statements_with_subject(Iri("urn:x:zz")) == frozenset()

    def test_objects(self, triple):
        """objects collects every value of one subject and predicate."""
        graph = Graph([triple("a", "p", "b"), triple("a", "p", "c"), triple("a", "q", "d")])
        assert graph.objects(Iri("urn:x:a"), Iri("urn:x:p")) == {Iri("urn:x:b"), Iri("urn:x:c")}

    def test_graphs_compare_by_content(self, triple):
        """Graphs with the same statements are equal."""
        assert Graph([triple("a", "p", "b")]) == Graph([triple("a", "p", "b")])

    @given(graphs, graphs)
    def test_set_algebra(self, a, b):
        """difference, intersection and union follow set algebra."""
        assert a.difference(b).statements == a.statements - b.statements
        assert a.intersection(b).statements == a.statements & b.statements
        assert a.union(b).statements == a.statements | b.statements

    @given(graphs)
    def test_indexes_cover_graph(self, graph):
        """Each index partitions the statements by one position."""
        for index, position in (
            (graph.by_subject, "subject"),
            (graph.by_predicate, "predicate"),
            (graph.by_object, "object"),
        ):
            assert sum(len(v) for v in index.values()) == len(graph)
            for key, found in index.items():
                assert all(getattr(s, position) == key for s in found)

    @given(graphs, statements)
    def test_insert_membership(self, graph, statement):
        """After insert the statement is a member and nothing else changed."""
        updated, added = graph.insert(statement)
        assert statement in updated
        assert added == (statement not in graph)
        assert updated.statements - {statement} == graph.statements - {statement}
