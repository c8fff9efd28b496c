"""Conversion of process-description XML into graphs, and corpus ingestion.

Corpus XML::

    <model>
      <entity id="e1" type="Activity">
        <property name="name" xml:lang="en">Design</property>
        <ref name="produces" target="e2"/>
      </entity>
    </model>

Each entity yields a type statement, each known property a literal-valued
statement and each known reference an IRI-valued statement. Entity ids are
used verbatim as local names under the base namespace.
"""

import logging
import os
import re
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import (
    DuplicateEntityId,
    InvalidProcessXml,
    MetadataMismatch,
    MissingCorpus,
    ParseError,
    XmlSyntaxError,
)
from .graph import Graph, Iri, Literal, Statement
from .repository import (
    VersionMeta,
    VersionRepository,
    parse_timestamp,
    unescape_tsv_field,
)
from .schema import ProcessSchema

logger = logging.getLogger(__name__)

XML_LANG = "{http://www.w3.org/XML/1998/namespace}lang"
METADATA_FILE = "versions.tsv"
VERSION_FILE = re.compile(r"^(\d+)\.xml$")


@dataclass(frozen=True)
class EntityRecord:
    """One ``<entity>`` element of a process description.

    Attributes:
        id: Entity id (IRI local name).
        type: Entity type name.
        properties: (name, value) pairs of text properties.
        refs: (relation name, target id) pairs.
    """

    id: str
    type: str
    properties: tuple[tuple[str, Literal], ...] = ()
    refs: tuple[tuple[str, str], ...] = ()


def _entity_iri(base_namespace: str, entity_id: str) -> Iri:
    try:
        return Iri(base_namespace + entity_id)
    except ValueError as err:
        raise InvalidProcessXml(f"entity id {entity_id!r} cannot be used in an IRI") from err


def convert_process_xml(
    document: str | bytes, schema: ProcessSchema, base_namespace: str | None = None
) -> tuple[Graph, list[str]]:
    """Convert one process description into a graph.

    Args:
        document: The XML text.
        schema: Process schema naming the known types, properties and relations.
        base_namespace: Entity IRI prefix (defaults to the schema's).

    Returns:
        Tuple of (graph, warnings).

    Raises:
        XmlSyntaxError: If the document is not well-formed.
        DuplicateEntityId: If two entities share an id.
        InvalidProcessXml: If the document does not follow the corpus format.
    """
    try:
        root = ET.fromstring(document)
    except ET.ParseError as err:
        raise XmlSyntaxError(str(err), err.position[0]) from err
    if root.tag != "model":
        raise InvalidProcessXml(f"root element must be <model>, got <{root.tag}>")

    base = base_namespace if base_namespace is not None else schema.base_namespace
    warnings: list[str] = []
    statements: list[Statement] = []
    refs: list[tuple[str, str, str]] = []
    seen: set[str] = set()

    for element in root:
        if element.tag != "entity":
            warnings.append(f"ignored element <{element.tag}>")
            continue
        entity_id, type_name = element.get("id"), element.get("type")
        if not entity_id or not type_name:
            raise InvalidProcessXml("<entity> needs both an id and a type attribute")
        if entity_id in seen:
            raise DuplicateEntityId(f"duplicate entity id {entity_id!r}")
        seen.add(entity_id)
        if type_name not in schema.entity_types:
            warnings.append(f"entity {entity_id}: unknown type {type_name!r}")
        subject = _entity_iri(base, entity_id)
        try:
            statements.append(Statement(subject, schema.type_predicate, schema.type_iri(type_name)))
        except ValueError as err:
            raise InvalidProcessXml(f"entity {entity_id}: invalid type {type_name!r}") from err

        for child in element:
            name = child.get("name")
            if child.tag == "property":
                if name not in schema.text_properties:
                    warnings.append(f"entity {entity_id}: unknown property {name!r}")
                    continue
                text = "".join(child.itertext())
                try:
                    value = Literal(text, child.get(XML_LANG) or None)
                except ValueError as err:
                    raise InvalidProcessXml(f"entity {entity_id}: {err}") from err
                statements.append(Statement(subject, schema.predicate(name), value))
            elif child.tag == "ref":
                target = child.get("target")
                if name not in schema.relations:
                    warnings.append(f"entity {entity_id}: unknown relation {name!r}")
                    continue
                if not target:
                    warnings.append(f"entity {entity_id}: reference {name!r} without target")
                    continue
                refs.append((entity_id, name, target))
            else:
                warnings.append(f"entity {entity_id}: ignored element <{child.tag}>")

    for entity_id, name, target in refs:
        if target not in seen:
            warnings.append(f"entity {entity_id}: dangling reference {name} -> {target}")
        try:
            target_iri = Iri(base + target)
        except ValueError:
            warnings.append(f"entity {entity_id}: reference target {target!r} is not a valid id")
            continue
        statements.append(
            Statement(_entity_iri(base, entity_id), schema.predicate(name), target_iri)
        )
    return Graph(statements), warnings


def parse_process_xml(
    document: str | bytes, schema: ProcessSchema, base_namespace: str | None = None
) -> Graph:
    """Convert one process description, logging conversion warnings."""
    graph, warnings = convert_process_xml(document, schema, base_namespace)
    for warning in warnings:
        logger.warning(warning)
    return graph


def entities_from_graph(graph: Graph, schema: ProcessSchema) -> list[EntityRecord]:
    """Reconstruct entity records from a converted graph (sorted by id).

    Only subjects with a type statement are entities; statements that do not
    follow the schema are not reconstructed.
    """
    records = []
    for type_statement in graph.by_predicate.get(schema.type_predicate, ()):
        subject = type_statement.subject
        type_object = type_statement.object
        type_name = schema.type_name(type_object) if isinstance(type_object, Iri) else None
        if type_name is None:
            continue
        properties, refs = [], []
        for s in graph.statements_with_subject(subject):
            name = schema.property_name(s.predicate)
            if name is None:
                continue
            if isinstance(s.object, Literal) and name in schema.text_properties:
                properties.append((name, s.object))
            elif isinstance(s.object, Iri) and name in schema.relations:
                refs.append((name, schema.local_name(s.object)))
        properties.sort(key=lambda p: (p[0], p[1].lexical, p[1].language or ""))
        refs.sort()
        records.append(
            EntityRecord(schema.local_name(subject), type_name, tuple(properties), tuple(refs))
        )
    records.sort(key=lambda r: (r.id, r.type))
    return records


_TEXT_ENTITIES = {"\r": "&#13;"}
_ATTRIBUTE_ENTITIES = {'"': "&quot;", "\n": "&#10;", "\r": "&#13;", "\t": "&#9;"}


def _attr(value: str) -> str:
    return '"' + escape(value, _ATTRIBUTE_ENTITIES) + '"'


def render_process_xml(entities: list[EntityRecord]) -> str:
    """Write entity records in the corpus XML dialect."""
    lines = ['<?xml version="1.0" encoding="UTF-8"?>', "<model>"]
    for entity in entities:
        lines.append(f"  <entity id={_attr(entity.id)} type={_attr(entity.type)}>")
        for name, value in entity.properties:
            lang = f" xml:lang={_attr(value.language)}" if value.language else ""
            text = escape(value.lexical, _TEXT_ENTITIES)
            lines.append(f"    <property name={_attr(name)}{lang}>{text}</property>")
        for name, target in entity.refs:
            lines.append(f"    <ref name={_attr(name)} target={_attr(target)}/>")
        lines.append("  </entity>")
    lines.append("</model>")
    return "\n".join(lines) + "\n"


@dataclass
class IngestReport:
    """Accounting of one corpus ingest.

    Attributes:
        attempted: Number of version files found.
        loaded: Number of versions committed.
        failed: (file name, error message) per unreadable version.
        warnings: (file name, message) per conversion or metadata warning.
    """

    attempted: int = 0
    loaded: int = 0
    failed: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "attempted": self.attempted,
            "loaded": self.loaded,
            "failed": [{"file": f, "error": e} for f, e in self.failed],
            "warnings": [{"file": f, "message": m} for f, m in self.warnings],
        }


def read_metadata(path: Path) -> dict[int, VersionMeta]:
    """Read a ``versions.tsv`` table.

    Columns are version, timestamp, author, comment and an optional release
    label. A first line whose version column is not a number is a header.

    Raises:
        ParseError: On a malformed row.
    """
    metas: dict[int, VersionMeta] = {}
    for number, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.rstrip("\r").split("\t")
        if number == 1 and not fields[0].strip().isdigit():
            continue
        if len(fields) < 4 or len(fields) > 5:
            raise ParseError(number, "expected 4 or 5 tab-separated columns", str(path))
        try:
            version = int(fields[0])
            meta = VersionMeta(
                version=version,
                timestamp=parse_timestamp(fields[1]) if fields[1].strip() else None,
                author=unescape_tsv_field(fields[2]),
                comment=unescape_tsv_field(fields[3]),
                release=(unescape_tsv_field(fields[4]) or None) if len(fields) == 5 else None,
            )
        except ValueError as err:
            raise ParseError(number, str(err), str(path)) from err
        if version in metas:
            raise ParseError(number, f"duplicate metadata row for version {version}", str(path))
        metas[version] = meta
    return metas


def _convert_file(path: Path, schema: ProcessSchema) -> tuple[Graph, list[str]]:
    return convert_process_xml(path.read_bytes(), schema)


def ingest_corpus(
    corpus_dir: Path,
    schema: ProcessSchema | None = None,
    repo_dir: Path | None = None,
    workers: int = 1,
    snapshot_interval: int | None = None,
) -> tuple[VersionRepository, IngestReport]:
    """Load every version file of a corpus into a new repository.

    Unreadable versions are skipped and leave a gap in the version sequence.

    Args:
        corpus_dir: Directory of ``NNNN.xml`` files and an optional ``versions.tsv``.
        schema: Process schema (defaults to the built-in schema).
        repo_dir: Repository directory; None keeps the repository in memory.
        workers: Number of parallel conversion processes.
        snapshot_interval: Snapshot spacing of the new repository.

    Returns:
        Tuple of (repository, report).

    Raises:
        MissingCorpus: If the directory is absent or holds no version files.
        MetadataMismatch: If a metadata row names a version without a file.
    """
    schema = schema or ProcessSchema()
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise MissingCorpus(f"corpus directory not found: {corpus_dir}")
    files: dict[int, Path] = {}
    for path in corpus_dir.iterdir():
        match = VERSION_FILE.match(path.name)
        if match and path.is_file():
            version = int(match.group(1))
            if version < 1 or version in files:
                raise MissingCorpus(f"invalid or repeated version file name: {path.name}")
            files[version] = path
    if not files:
        raise MissingCorpus(f"no version files in {corpus_dir}")

    metadata_path = corpus_dir / METADATA_FILE
    metas = read_metadata(metadata_path) if metadata_path.is_file() else {}
    missing = sorted(set(metas) - set(files))
    if missing:
        raise MetadataMismatch(
            f"{METADATA_FILE} lists versions without files: {', '.join(map(str, missing))}"
        )

    report = IngestReport(attempted=len(files))
    results: dict[int, tuple[Graph, list[str]] | str] = {}

    def attempt(path: Path) -> tuple[Graph, list[str]] | str:
        try:
            return _convert_file(path, schema)
        except InvalidProcessXml as err:
            return str(err)

    if workers > 1 and len(files) > 1:
        num_workers = max(1, min(workers, os.cpu_count() or 4, len(files)))
        logger.info("Converting %d versions with %d workers", len(files), num_workers)
        with ProcessPoolExecutor(max_workers=num_workers) as executor:
            future_to_version = {
                executor.submit(_convert_file, path, schema): version
                for version, path in files.items()
            }
            for future in as_completed(future_to_version):
                version = future_to_version[future]
                try:
                    results[version] = future.result()
                except InvalidProcessXml as err:
                    results[version] = str(err)
    else:
        for version in sorted(files):
            results[version] = attempt(files[version])

    options = {} if snapshot_interval is None else {"snapshot_interval": snapshot_interval}
    if repo_dir is not None:
        repo = VersionRepository.create(repo_dir, schema, **options)
    else:
        repo = VersionRepository(schema=schema, **options)

    for version in sorted(files):
        name = files[version].name
        outcome = results[version]
        if isinstance(outcome, str):
            logger.warning("%s: unreadable version skipped: %s", name, outcome)
            report.failed.append((name, outcome))
            continue
        graph, warnings = outcome
        for warning in warnings:
            logger.warning("%s: %s", name, warning)
            report.warnings.append((name, warning))
        repo.commit(graph, metas.get(version, VersionMeta(version)))
        report.loaded += 1

    for earlier, later in repo.timestamp_regressions():
        message = f"timestamp of version {later} is earlier than that of version {earlier}"
        logger.warning(message)
        report.warnings.append((files[later].name, message))
    logger.info(
        "Loaded %d of %d versions (%d failed, %d warnings)",
        report.loaded,
        report.attempted,
        len(report.failed),
        len(report.warnings),
    )
    return repo, report
