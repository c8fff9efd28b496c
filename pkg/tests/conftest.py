"""Shared fixtures: schemas, small hand-written models and generated corpora."""

import logging
from datetime import datetime, timezone

import pytest

from process_evolution.changes import detect_history
from process_evolution.generator import GeneratorConfig, Release, generate
from process_evolution.graph import Graph, Iri, Literal, Statement
from process_evolution.ingest import ingest_corpus
from process_evolution.schema import ProcessSchema

SAMPLE_XML = """<?xml version="1.0" encoding="UTF-8"?>
<model>
  <entity id="pm1" type="ProcessModule">
    <property name="name">Project management</property>
    <ref name="contains" target="a1"/>
    <ref name="contains" target="p1"/>
  </entity>
  <entity id="a1" type="Activity">
    <property name="name">Plan project</property>
    <property name="description" xml:lang="en">Create the <b>project</b> plan</property>
    <ref name="produces" target="p1"/>
  </entity>
  <entity id="p1" type="Product">
    <property name="name">Project plan</property>
  </entity>
  <entity id="r1" type="Role">
    <property name="name">Project leader</property>
    <ref name="responsible" target="p1"/>
  </entity>
</model>
"""


@pytest.fixture(autouse=True)
def _restore_root_logger():
    """Undo CLI logging.basicConfig(force=True) so caplog sees later warnings."""
    root = logging.getLogger()
    level, handlers = root.level, root.handlers[:]
    yield
    root.setLevel(level)
    root.handlers[:] = handlers


@pytest.fixture
def schema() -> ProcessSchema:
    return ProcessSchema()


@pytest.fixture
def sample_xml() -> str:
    """Module pm1 containing a1 and p1; r1 is in no module."""
    return SAMPLE_XML


def entity_graph(schema: ProcessSchema, model: dict) -> Graph:
    """Build a graph from {id: (type, {prop: text}, [(relation, target)])}."""
    statements = []
    for entity_id, (type_name, props, refs) in model.items():
        subject = schema.entity_iri(entity_id)
        statements.append(Statement(subject, schema.type_predicate, schema.type_iri(type_name)))
        for name, text in props.items():
            statements.append(Statement(subject, schema.predicate(name), Literal(text)))
        for name, target in refs:
            statements.append(
                Statement(subject, schema.predicate(name), schema.entity_iri(target))
            )
    return Graph(statements)


@pytest.fixture
def make_graph(schema):
    """Factory for entity graphs in the default schema."""

    def make(model: dict) -> Graph:
        return entity_graph(schema, model)

    return make


@pytest.fixture
def triple():
    """Factory for statements over short IRIs: triple("s", "p", "o") or a Literal object."""

    def make(s: str, p: str, o: "str | Literal") -> Statement:
        obj = o if isinstance(o, Literal) else Iri(f"urn:x:{o}")
        return Statement(Iri(f"urn:x:{s}"), Iri(f"urn:x:{p}"), obj)

    return make


SMALL_CONFIG = GeneratorConfig(
    seed=7,
    version_count=24,
    module_count=3,
    initial_entity_count=15,
    final_entity_count=21,
    operations_per_version=2,
    releases=(Release(12, 4, "R1"), Release(22, 4, "R2")),
    burst_radius=2,
    malformed_versions=frozenset({6}),
    start=datetime(2006, 3, 1, 8, 0, tzinfo=timezone.utc),
)


@pytest.fixture(scope="session")
def small_corpus():
    """A generated corpus of 24 versions with version 6 malformed."""
    return generate(SMALL_CONFIG)


@pytest.fixture
def corpus_dir(tmp_path, small_corpus):
    path = tmp_path / "corpus"
    small_corpus.write(path)
    return path


@pytest.fixture
def ingested(tmp_path, corpus_dir):
    """Repository built from the small corpus, with changes detected."""
    repo, report = ingest_corpus(corpus_dir, repo_dir=tmp_path / "repo", snapshot_interval=5)
    detect_history(repo)
    return repo, report
