"""Typed change detection on comparison models, and the change-record encodings.

Changes are found by matching five patterns against a comparison model:

- EntityAdded(e): e is the subject of at least one OnlyTarget statement and
  of no Common or OnlyBase statement. EntityDeleted mirrors it.
- RelationAdded(e, r, e2): an OnlyTarget statement (e, r, e2) whose
  predicate is a schema relation and whose object is an IRI. The record is
  flagged as entailed when e or e2 is itself added or deleted.
  RelationDeleted mirrors it with OnlyBase.
- TextPropertyChanged(e, p): e survives, p is a text property, and the value
  set of (e, p) differs between base and target. One record per (e, p)
  carries both full value sets.

Changed statements no pattern explains are reported as SchemaMismatch
warnings.
"""

import csv
import hashlib
import io
import logging
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING

from .comparison import ComparisonModel, VersionLabel, compare
from .errors import MalformedChangeGraph, ParseError
from .graph import Graph, Iri, Literal, Statement
from .membership import attributed_modules, containment_graph
from .ntriples import LITERAL_TOKEN, format_statement, format_term, unescape_literal
from .schema import ProcessSchema

if TYPE_CHECKING:
    from .repository import VersionRepository

logger = logging.getLogger(__name__)

CHANGE_NAMESPACE = "urn:process-evolution:change#"
CHANGE_NODE_PREFIX = "urn:process-evolution:change/"

CSV_COLUMNS = [
    "kind",
    "fromVersion",
    "toVersion",
    "entity",
    "property",
    "relatedEntity",
    "oldValues",
    "newValues",
    "entailed",
]


class ChangeKind(Enum):
    ENTITY_ADDED = "EntityAdded"
    ENTITY_DELETED = "EntityDeleted"
    RELATION_ADDED = "RelationAdded"
    RELATION_DELETED = "RelationDeleted"
    TEXT_PROPERTY_CHANGED = "TextPropertyChanged"


_KIND_ORDER = {kind: i for i, kind in enumerate(ChangeKind)}
ENTITY_KINDS = frozenset({ChangeKind.ENTITY_ADDED, ChangeKind.ENTITY_DELETED})
RELATION_KINDS = frozenset({ChangeKind.RELATION_ADDED, ChangeKind.RELATION_DELETED})
DEFAULT_KINDS = frozenset(
    {ChangeKind.TEXT_PROPERTY_CHANGED, ChangeKind.ENTITY_ADDED, ChangeKind.ENTITY_DELETED}
)


def _literal_key(values: Iterable[Literal]) -> tuple[str, ...]:
    return tuple(sorted(format_term(v) for v in values))


@dataclass(frozen=True)
class ChangeRecord:
    """One typed change to an entity between two versions."""

    kind: ChangeKind
    from_version: int
    to_version: int
    entity: Iri
    property: Iri | None = None
    related_entity: Iri | None = None
    old_values: frozenset[Literal] = field(default_factory=frozenset)
    new_values: frozenset[Literal] = field(default_factory=frozenset)
    entailed: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "old_values", frozenset(self.old_values))
        object.__setattr__(self, "new_values", frozenset(self.new_values))
        kind = self.kind
        if kind is ChangeKind.TEXT_PROPERTY_CHANGED:
            if self.property is None:
                raise ValueError("TextPropertyChanged needs a property")
            if not (self.old_values | self.new_values) or self.old_values == self.new_values:
                raise ValueError("TextPropertyChanged needs differing value sets")
            if self.related_entity is not None:
                raise ValueError("TextPropertyChanged has no related entity")
        elif kind in RELATION_KINDS:
            if self.property is None or self.related_entity is None:
                raise ValueError(f"{kind.value} needs a property and a related entity")
        elif self.property is not None or self.related_entity is not None:
            raise ValueError(f"{kind.value} has no property or related entity")
        if kind is not ChangeKind.TEXT_PROPERTY_CHANGED and (self.old_values or self.new_values):
            raise ValueError(f"{kind.value} carries no values")
        if self.entailed and kind not in RELATION_KINDS:
            raise ValueError("only relation changes can be entailed")

    def sort_key(self) -> tuple:
        return (
            self.to_version,
            self.from_version,
            _KIND_ORDER[self.kind],
            self.entity.value,
            self.property.value if self.property else "",
            self.related_entity.value if self.related_entity else "",
            _literal_key(self.old_values),
            _literal_key(self.new_values),
        )


@dataclass(frozen=True)
class SchemaMismatch:
    """A changed statement no change pattern accounts for."""

    from_version: int | None
    to_version: int | None
    statement: Statement
    label: VersionLabel
    reason: str

    def __str__(self) -> str:
        return f"{self.label.value} {format_statement(self.statement)}  ({self.reason})"


@dataclass(frozen=True)
class DetectionScope:
    """Restricts detection to entity types and/or module members.

    Attributes:
        entity_types: Type names a record's entity must have in either version.
        modules: Modules a record's entity must belong to (at the later
            version, or the earlier one for deleted entities).
    """

    entity_types: frozenset[str] | None = None
    modules: frozenset[Iri] | None = None


def _version_pair(cm: ComparisonModel) -> tuple[int, int]:
    return (cm.base_version or 0, cm.target_version or 0)


def _entity_changes(cm: ComparisonModel) -> tuple[set[Iri], set[Iri]]:
    """Subjects added and deleted in ``cm``."""
    labels: dict[Iri, set[VersionLabel]] = defaultdict(set)
    for statement, label in cm.entries():
        labels[statement.subject].add(label)
    added = {e for e, seen in labels.items() if seen == {VersionLabel.ONLY_TARGET}}
    deleted = {e for e, seen in labels.items() if seen == {VersionLabel.ONLY_BASE}}
    return added, deleted


def detect_changes(
    cm: ComparisonModel, schema: ProcessSchema, scope: DetectionScope | None = None
) -> list[ChangeRecord]:
    """Identify typed changes in a (complete) comparison model.

    Args:
        cm: Comparison of two versions converted under ``schema``.
        schema: The process schema.
        scope: Optional restriction to entity types or modules.

    Returns:
        Records sorted by (kind, entity, property).
    """
    from_v, to_v = _version_pair(cm)
    added, deleted = _entity_changes(cm)
    touched = added | deleted
    records: list[ChangeRecord] = []

    for e in added:
        records.append(ChangeRecord(ChangeKind.ENTITY_ADDED, from_v, to_v, e))
    for e in deleted:
        records.append(ChangeRecord(ChangeKind.ENTITY_DELETED, from_v, to_v, e))

    relation_kinds = (
        (cm.only_target, ChangeKind.RELATION_ADDED),
        (cm.only_base, ChangeKind.RELATION_DELETED),
    )
    for statements, kind in relation_kinds:
        for s in statements:
            if isinstance(s.object, Iri) and schema.is_relation_predicate(s.predicate):
                entailed = s.subject in touched or s.object in touched
                records.append(
                    ChangeRecord(
                        kind, from_v, to_v, s.subject, s.predicate, s.object, entailed=entailed
                    )
                )

    changed_text = {
        (s.subject, s.predicate)
        for s in cm.only_base | cm.only_target
        if s.subject not in touched
        and isinstance(s.object, Literal)
        and schema.is_text_predicate(s.predicate)
    }
    if changed_text:
        old: dict[tuple[Iri, Iri], set[Literal]] = defaultdict(set)
        new: dict[tuple[Iri, Iri], set[Literal]] = defaultdict(set)
        for statement, label in cm.entries():
            key = (statement.subject, statement.predicate)
            if key not in changed_text or not isinstance(statement.object, Literal):
                continue
            if label is not VersionLabel.ONLY_TARGET:
                old[key].add(statement.object)
            if label is not VersionLabel.ONLY_BASE:
                new[key].add(statement.object)
        for e, p in changed_text:
            records.append(
                ChangeRecord(
                    ChangeKind.TEXT_PROPERTY_CHANGED,
                    from_v,
                    to_v,
                    e,
                    p,
                    old_values=frozenset(old[(e, p)]),
                    new_values=frozenset(new[(e, p)]),
                )
            )

    if scope is not None:
        records = _apply_scope(records, cm, schema, scope)
    records.sort(key=ChangeRecord.sort_key)
    return records


def _apply_scope(
    records: list[ChangeRecord],
    cm: ComparisonModel,
    schema: ProcessSchema,
    scope: DetectionScope,
) -> list[ChangeRecord]:
    base = Graph(cm.common | cm.only_base)
    target = Graph(cm.common | cm.only_target)
    kept = records
    if scope.entity_types is not None:
        wanted = {schema.type_iri(t) for t in scope.entity_types}
        type_predicate = schema.type_predicate

        def has_type(entity: Iri) -> bool:
            types = base.objects(entity, type_predicate) | target.objects(entity, type_predicate)
            return bool(types & wanted)

        kept = [r for r in kept if has_type(r.entity)]
    if scope.modules is not None:
        before = containment_graph(base, schema)
        after = containment_graph(target, schema)
        kept = [
            r
            for r in kept
            if scope.modules.intersection(
                attributed_modules(r.entity, before, after, r.entity in target.by_subject)
            )
        ]
    return kept


def find_schema_mismatches(cm: ComparisonModel, schema: ProcessSchema) -> list[SchemaMismatch]:
    """Changed statements that no change pattern accounts for."""
    from_v, to_v = cm.base_version, cm.target_version
    added, deleted = _entity_changes(cm)
    touched = added | deleted
    type_predicate = schema.type_predicate
    mismatches = []
    for label in (VersionLabel.ONLY_BASE, VersionLabel.ONLY_TARGET):
        for s in cm.statements(label):
            if s.predicate == type_predicate:
                if s.subject not in touched:
                    reason = "entity type changed"
                elif isinstance(s.object, Literal):
                    reason = "literal entity type"
                else:
                    continue
            elif schema.is_text_predicate(s.predicate):
                if isinstance(s.object, Literal):
                    continue
                reason = "text property with IRI value"
            elif schema.is_relation_predicate(s.predicate):
                if isinstance(s.object, Iri):
                    continue
                reason = "relation with literal value"
            else:
                reason = "predicate not in schema"
            mismatches.append(SchemaMismatch(from_v, to_v, s, label, reason))
    mismatches.sort(key=lambda m: (m.label.value, format_statement(m.statement)))
    return mismatches


def detect_history(
    repo: "VersionRepository",
    schema: ProcessSchema | None = None,
    scope: DetectionScope | None = None,
    mismatches: list[SchemaMismatch] | None = None,
) -> list[ChangeRecord]:
    """Detect changes between every pair of consecutive stored versions.

    Versions next to a gap are compared with the nearest earlier stored
    version. The records replace any previously stored ones.

    Args:
        repo: The version repository.
        schema: Process schema (defaults to the repository's schema).
        scope: Optional detection scope.
        mismatches: If given, schema mismatches are appended to it.

    Returns:
        All detected records in history order.
    """
    schema = schema or repo.schema
    records: list[ChangeRecord] = []
    previous: tuple[int, Graph] | None = None
    for meta, graph in repo.iter_versions():
        if previous is not None:
            cm = compare(previous[1], graph, previous[0], meta.version)
            found = detect_changes(cm, schema, scope)
            records.extend(found)
            pair_mismatches = find_schema_mismatches(cm, schema)
            for m in pair_mismatches:
                logger.warning("versions %d-%d: %s", previous[0], meta.version, m)
            if mismatches is not None:
                mismatches.extend(pair_mismatches)
            logger.debug("versions %d-%d: %d changes", previous[0], meta.version, len(found))
        previous = (meta.version, graph)
    if previous is None or len(repo) < 2:
        logger.info("fewer than two versions stored; no version pairs to compare")
    repo.store_change_records(records, replace=True)
    return records


def _vocab(name: str) -> Iri:
    return Iri(CHANGE_NAMESPACE + name)


KIND = _vocab("kind")
FROM_VERSION = _vocab("fromVersion")
TO_VERSION = _vocab("toVersion")
ENTITY = _vocab("entity")
PROPERTY = _vocab("property")
RELATED_ENTITY = _vocab("relatedEntity")
OLD_VALUE = _vocab("oldValue")
NEW_VALUE = _vocab("newValue")
ENTAILED = _vocab("entailed")

_KINDS_BY_IRI = {_vocab(kind.value): kind for kind in ChangeKind}


def change_node(record: ChangeRecord) -> Iri:
    """Deterministic node IRI minted from all record fields."""
    fields = [
        record.kind.value,
        str(record.from_version),
        str(record.to_version),
        record.entity.value,
        record.property.value if record.property else "",
        record.related_entity.value if record.related_entity else "",
        " ".join(_literal_key(record.old_values)),
        " ".join(_literal_key(record.new_values)),
        "true" if record.entailed else "false",
    ]
    digest = hashlib.sha256("\x1f".join(fields).encode("utf-8")).hexdigest()
    return Iri(CHANGE_NODE_PREFIX + digest[:32])


def encode_changes_as_graph(records: Iterable[ChangeRecord]) -> Graph:
    """One node per record with one statement per present field."""
    statements = []
    for r in records:
        node = change_node(r)
        statements += [
            Statement(node, KIND, _vocab(r.kind.value)),
            Statement(node, FROM_VERSION, Literal(str(r.from_version))),
            Statement(node, TO_VERSION, Literal(str(r.to_version))),
            Statement(node, ENTITY, r.entity),
        ]
        if r.property is not None:
            statements.append(Statement(node, PROPERTY, r.property))
        if r.related_entity is not None:
            statements.append(Statement(node, RELATED_ENTITY, r.related_entity))
        statements += [Statement(node, OLD_VALUE, v) for v in r.old_values]
        statements += [Statement(node, NEW_VALUE, v) for v in r.new_values]
        if r.entailed:
            statements.append(Statement(node, ENTAILED, Literal("true")))
    return Graph(statements)


_FIELD_NAMES = {
    KIND: "kind",
    FROM_VERSION: "fromVersion",
    TO_VERSION: "toVersion",
    ENTITY: "entity",
    PROPERTY: "property",
    RELATED_ENTITY: "relatedEntity",
    OLD_VALUE: "oldValue",
    NEW_VALUE: "newValue",
    ENTAILED: "entailed",
}


def _decode_node(node: Iri, statements: Iterable[Statement]) -> ChangeRecord:
    fields: dict[Iri, list] = defaultdict(list)
    for s in statements:
        if s.predicate not in _FIELD_NAMES:
            raise MalformedChangeGraph(f"{node.value}: unknown predicate {s.predicate.value}")
        fields[s.predicate].append(s.object)

    def single(predicate: Iri, required: bool = True):
        values = fields[predicate]
        name = _FIELD_NAMES[predicate]
        if len(values) > 1:
            raise MalformedChangeGraph(f"{node.value}: more than one {name}")
        if not values:
            if required:
                raise MalformedChangeGraph(f"{node.value}: missing {name}")
            return None
        return values[0]

    def version(predicate: Iri) -> int:
        term = single(predicate)
        if not isinstance(term, Literal) or not term.lexical.isdigit():
            raise MalformedChangeGraph(f"{node.value}: {_FIELD_NAMES[predicate]} is not a version")
        return int(term.lexical)

    def iri(predicate: Iri, required: bool = True) -> Iri | None:
        term = single(predicate, required)
        if term is not None and not isinstance(term, Iri):
            raise MalformedChangeGraph(f"{node.value}: {_FIELD_NAMES[predicate]} must be an IRI")
        return term

    kind = _KINDS_BY_IRI.get(single(KIND))
    if kind is None:
        raise MalformedChangeGraph(f"{node.value}: unknown change kind")
    entailed = single(ENTAILED, required=False)
    if entailed is not None and entailed != Literal("true"):
        raise MalformedChangeGraph(f"{node.value}: invalid entailed flag")
    if not all(isinstance(v, Literal) for v in fields[OLD_VALUE] + fields[NEW_VALUE]):
        raise MalformedChangeGraph(f"{node.value}: change values must be literals")
    try:
        return ChangeRecord(
            kind=kind,
            from_version=version(FROM_VERSION),
            to_version=version(TO_VERSION),
            entity=iri(ENTITY),
            property=iri(PROPERTY, required=False),
            related_entity=iri(RELATED_ENTITY, required=False),
            old_values=frozenset(fields[OLD_VALUE]),
            new_values=frozenset(fields[NEW_VALUE]),
            entailed=entailed is not None,
        )
    except ValueError as err:
        raise MalformedChangeGraph(f"{node.value}: {err}") from err


def decode_changes_from_graph(graph: Graph) -> list[ChangeRecord]:
    """Inverse of encode_changes_as_graph.

    Raises:
        MalformedChangeGraph: On missing, repeated or ill-typed fields.
    """
    records = [_decode_node(node, statements) for node, statements in graph.by_subject.items()]
    records.sort(key=ChangeRecord.sort_key)
    return records


def _join_values(values: frozenset[Literal]) -> str:
    return " ".join(_literal_key(values))


def _split_values(text: str, line_number: int) -> frozenset[Literal]:
    values = []
    position = 0
    text = text.strip()
    while position < len(text):
        match = LITERAL_TOKEN.match(text, position)
        if not match:
            raise ParseError(line_number, f"malformed value list: {text!r}")
        values.append(Literal(unescape_literal(match.group(1)), match.group(2)))
        position = match.end()
        while position < len(text) and text[position] == " ":
            position += 1
    return frozenset(values)


def records_to_csv(records: Iterable[ChangeRecord]) -> str:
    """Change-record CSV; value sets are joined canonical literals."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in records:
        writer.writerow(
            {
                "kind": r.kind.value,
                "fromVersion": r.from_version,
                "toVersion": r.to_version,
                "entity": r.entity.value,
                "property": r.property.value if r.property else "",
                "relatedEntity": r.related_entity.value if r.related_entity else "",
                "oldValues": _join_values(r.old_values),
                "newValues": _join_values(r.new_values),
                "entailed": "true" if r.entailed else "false",
            }
        )
    return buffer.getvalue()


def records_from_csv(text: str) -> list[ChangeRecord]:
    """Parse records_to_csv output.

    Raises:
        ParseError: On a malformed row (line numbers count the header as 1).
    """
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is not None and reader.fieldnames != CSV_COLUMNS:
        raise ParseError(1, f"expected columns {','.join(CSV_COLUMNS)}")
    records = []
    for number, row in enumerate(reader, start=2):
        try:
            records.append(
                ChangeRecord(
                    kind=ChangeKind(row["kind"]),
                    from_version=int(row["fromVersion"]),
                    to_version=int(row["toVersion"]),
                    entity=Iri(row["entity"]),
                    property=Iri(row["property"]) if row["property"] else None,
                    related_entity=Iri(row["relatedEntity"]) if row["relatedEntity"] else None,
                    old_values=_split_values(row["oldValues"], number),
                    new_values=_split_values(row["newValues"], number),
                    entailed=row["entailed"] == "true",
                )
            )
        except (KeyError, TypeError, ValueError) as err:
            raise ParseError(number, str(err)) from err
    return records
