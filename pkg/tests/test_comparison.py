"""Tests for comparison models, delta application and the comparison export."""

import pytest
from hypothesis import given, settings

from process_evolution.comparison import (
    ComparisonModel,
    VersionLabel,
    apply_delta,
    compare,
    export_comparison,
    parse_comparison,
)
from process_evolution.errors import BaseMismatch, ParseError
from process_evolution.graph import Graph, Literal

from strategies import graphs


class TestCompare:
    """Tests for compare."""

    def test_labels(self, triple):
        """Shared statements are common; the rest belong to one side."""
        kept, old, new = triple("a", "p", "b"), triple("a", "p", "c"), triple("a", "p", "d")
        cm = compare(Graph([kept, old]), Graph([kept, new]), 1, 2)
        assert cm.common == {kept}
        assert cm.only_base == {old}
        assert cm.only_target == {new}
        assert cm.label_of(kept) is VersionLabel.COMMON
        assert cm.label_of(triple("z", "p", "z")) is None

    def test_identity(self, triple):
        """Comparing a graph with itself labels everything common."""
        graph = Graph([triple("a", "p", "b")])
        cm = compare(graph, graph, 1, 1)
        assert cm.is_identity
        assert export_comparison(cm) == "= <urn:x:a> <urn:x:p> <urn:x:b> .\n"

    def test_overlapping_labels_rejected(self, triple):
        """A statement cannot carry two labels."""
        s = triple("a", "p", "b")
        with pytest.raises(ValueError):
            ComparisonModel(1, 2, frozenset({s}), frozenset({s}), frozenset())

    @settings(max_examples=500)
    @given(graphs, graphs)
    def test_partition_laws(self, base, target):
        """The labels partition the union exactly as set algebra says."""
        cm = compare(base, target)
        assert cm.common == base.statements & target.statements
        assert cm.only_base == base.statements - target.statements
        assert cm.only_target == target.statements - base.statements
        assert len(cm) == len(base.statements | target.statements)

    @given(graphs, graphs)
    def test_swapped(self, base, target):
        """Swapping a comparison equals comparing the other way round."""
        assert compare(base, target, 1, 2).swapped() == compare(target, base, 2, 1)


class TestApplyDelta:
    """Tests for apply_delta."""

    @settings(max_examples=300)
    @given(graphs, graphs)
    def test_reconstructs_target(self, base, target):
        """Applying a comparison to its base yields the target."""
        cm = compare(base, target)
        assert apply_delta(base, cm) == target
        assert apply_delta(base, cm.without_common(), partial=True) == target

    def test_wrong_base(self, triple):
        """A full comparison only applies to its own base."""
        cm = compare(Graph([triple("a", "p", "b")]), Graph())
        with pytest.raises(BaseMismatch):
            apply_delta(Graph([triple("x", "p", "y")]), cm)

    def test_partial_precondition(self, triple):
        """A partial delta must delete present statements and add absent ones."""
        s = triple("a", "p", "b")
        add_present = ComparisonModel(1, 2, frozenset(), frozenset(), frozenset({s}))
        with pytest.raises(BaseMismatch):
            apply_delta(Graph([s]), add_present, partial=True)
        delete_absent = ComparisonModel(1, 2, frozenset(), frozenset({s}), frozenset())
        with pytest.raises(BaseMismatch):
            apply_delta(Graph(), delete_absent, partial=True)


class TestExport:
    """Tests for the comparison export format."""

    def test_label_order(self, triple):
        """Common lines come first, then deletions, then additions."""
        cm = compare(
            Graph([triple("a", "p", "b"), triple("c", "p", Literal("old"))]),
            Graph([triple("a", "p", "b"), triple("c", "p", Literal("new"))]),
            3,
            4,
        )
        lines = export_comparison(cm).splitlines()
        assert [line[0] for line in lines] == ["=", "-", "+"]

    def test_empty(self):
        """Two empty graphs export as an empty document."""
        assert export_comparison(compare(Graph(), Graph(), 1, 2)) == ""
        assert parse_comparison("") == compare(Graph(), Graph())

    def test_versions_not_exported(self, triple):
        """The document holds statement lines only, whatever the version numbers."""
        graph = Graph([triple("a", "p", "b")])
        assert export_comparison(compare(graph, Graph(), 3, 4)) == export_comparison(
            compare(graph, Graph())
        )
        parsed = parse_comparison(export_comparison(compare(graph, Graph())), None, 3, 4)
        assert (parsed.base_version, parsed.target_version) == (3, 4)

    @pytest.mark.parametrize(
        "text",
        [
            "* <urn:a> <urn:p> <urn:o> .\n",
            "+<urn:a> <urn:p> <urn:o> .\n",
            "+ <urn:a> <urn:p> <urn:o> .\n- <urn:a> <urn:p> <urn:o> .\n",
            "= <urn:a> <urn:p> .\n",
        ],
    )
    def test_malformed(self, text):
        """Bad prefixes, double labels and bad statements are rejected."""
        with pytest.raises(ParseError):
            parse_comparison(text)

    @settings(max_examples=300)
    @given(graphs, graphs)
    def test_round_trip(self, base, target):
        """parse_comparison inverts export_comparison."""
        cm = compare(base, target, 7, 9)
        text = export_comparison(cm)
        assert parse_comparison(text, base_version=7, target_version=9) == cm
        assert export_comparison(parse_comparison(text)) == text
