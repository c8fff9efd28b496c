"""Tests for module membership and change attribution."""

from process_evolution.changes import ChangeKind, ChangeRecord
from process_evolution.membership import (
    attribute_records,
    attributed_modules,
    containment_graph,
    members_of,
    module_entities,
    modules_of,
    typed_entities,
)

MODEL = {
    "pm1": ("ProcessModule", {"name": "Planning"}, [("contains", "a1"), ("contains", "p1")]),
    "pm2": ("ProcessModule", {"name": "Quality"}, [("contains", "p1")]),
    "pm3": ("ProcessModule", {}, []),
    "a1": ("Activity", {"name": "Plan"}, [("produces", "p1")]),
    "p1": ("Product", {"name": "Plan document"}, []),
    "r1": ("Role", {"name": "Leader"}, []),
}


class TestMembership:
    """Tests for module and member lookup in one version."""

    def test_module_entities(self, schema, make_graph):
        """Typed modules are modules even when empty."""
        graph = make_graph(MODEL)
        assert module_entities(graph, schema) == {
            schema.entity_iri(m) for m in ("pm1", "pm2", "pm3")
        }

    def test_containment_subject_is_module(self, schema, make_graph):
        """Any subject of a containment statement counts as a module."""
        graph = make_graph({"x": ("Activity", {}, [("contains", "y")])})
        assert schema.entity_iri("x") in module_entities(graph, schema)

    def test_typed_entities(self, schema, make_graph):
        """Every subject with a type statement is an entity."""
        assert len(typed_entities(make_graph(MODEL), schema)) == 6

    def test_modules_and_members(self, schema, make_graph):
        """An entity can belong to several modules, or to none."""
        containment = containment_graph(make_graph(MODEL), schema)
        p1, r1 = schema.entity_iri("p1"), schema.entity_iri("r1")
        assert modules_of(containment, p1) == [schema.entity_iri("pm1"), schema.entity_iri("pm2")]
        assert modules_of(containment, r1) == []
        assert members_of(containment, schema.entity_iri("pm1")) == {
            schema.entity_iri("a1"),
            p1,
        }
        assert members_of(containment, schema.entity_iri("pm3")) == set()
        assert members_of(containment, schema.entity_iri("nope")) == set()

    def test_deleted_entity_keeps_earlier_modules(self, schema, make_graph):
        """Membership is read at the later version unless the entity is gone."""
        before = containment_graph(make_graph(MODEL), schema)
        moved = dict(MODEL)
        moved["pm1"] = ("ProcessModule", {}, [("contains", "p1")])
        moved["pm3"] = ("ProcessModule", {}, [("contains", "a1")])
        after = containment_graph(make_graph(moved), schema)
        a1 = schema.entity_iri("a1")
        assert attributed_modules(a1, before, after, True) == [schema.entity_iri("pm3")]
        assert attributed_modules(a1, before, after, False) == [schema.entity_iri("pm1")]


class TestAttributeRecords:
    """Tests for attribute_records over a history."""

    def test_attribution_over_history(self, schema, make_graph):
        """Added entities use the later version, deleted ones the earlier."""
        v1 = make_graph(MODEL)
        reduced = {k: v for k, v in MODEL.items() if k != "a1"}
        reduced["pm1"] = ("ProcessModule", {"name": "Planning"}, [("contains", "p1")])
        v2 = make_graph(reduced)
        grown = dict(reduced)
        grown["a2"] = ("Activity", {"name": "Review"}, [])
        grown["pm2"] = (
            "ProcessModule",
            {"name": "Quality"},
            [("contains", "p1"), ("contains", "a2")],
        )
        v3 = make_graph(grown)

        deleted = ChangeRecord(ChangeKind.ENTITY_DELETED, 1, 2, schema.entity_iri("a1"))
        added = ChangeRecord(ChangeKind.ENTITY_ADDED, 2, 3, schema.entity_iri("a2"))
        loose = ChangeRecord(ChangeKind.ENTITY_ADDED, 2, 3, schema.entity_iri("r1"))
        result = dict(
            attribute_records([added, deleted, loose], [(1, v1), (2, v2), (3, v3)], schema)
        )
        assert result[deleted] == [schema.entity_iri("pm1")]
        assert result[added] == [schema.entity_iri("pm2")]
        assert result[loose] == []

    def test_grouped_by_target_version(self, schema, make_graph):
        """Records come out in target-version order."""
        graph = make_graph(MODEL)
        late = ChangeRecord(ChangeKind.ENTITY_ADDED, 2, 3, schema.entity_iri("r1"))
        early = ChangeRecord(ChangeKind.ENTITY_ADDED, 1, 2, schema.entity_iri("a1"))
        history = [(1, graph), (2, graph), (3, graph)]
        assert [r for r, _ in attribute_records([late, early], history, schema)] == [early, late]

    def test_no_records(self, schema, make_graph):
        """Without records the history is not consumed."""

        def history():
            raise AssertionError("history must not be read")
            yield

        assert list(attribute_records([], history(), schema)) == []
