"""Tests for XML conversion and corpus ingestion."""

import pytest

from process_evolution.errors import (
    DuplicateEntityId,
    InvalidProcessXml,
    MetadataMismatch,
    MissingCorpus,
    ParseError,
    XmlSyntaxError,
)
from process_evolution.graph import Literal
from process_evolution.ingest import (
    EntityRecord,
    convert_process_xml,
    entities_from_graph,
    ingest_corpus,
    parse_process_xml,
    read_metadata,
    render_process_xml,
)


def _entity(body: str, entity_id: str = "a1", type_name: str = "Activity") -> str:
    return f'<model><entity id="{entity_id}" type="{type_name}">{body}</entity></model>'


class TestConvertProcessXml:
    """Tests for converting one document."""

    def test_sample(self, schema, sample_xml):
        """Every entity, property and reference becomes a statement."""
        graph, warnings = convert_process_xml(sample_xml, schema)
        assert warnings == []
        assert len(graph) == 13
        a1 = schema.entity_iri("a1")
        assert graph.objects(a1, schema.predicate("description")) == {
            Literal("Create the project plan", "en")
        }
        assert graph.objects(schema.entity_iri("pm1"), schema.containment_predicate) == {
            a1,
            schema.entity_iri("p1"),
        }
        assert graph.objects(a1, schema.type_predicate) == {schema.type_iri("Activity")}

    def test_bytes_input(self, schema, sample_xml):
        """Encoded documents convert like text."""
        graph, _ = convert_process_xml(sample_xml.encode("utf-8"), schema)
        assert graph == convert_process_xml(sample_xml, schema)[0]

    def test_base_namespace_override(self, schema, sample_xml):
        """Entity IRIs can use another base namespace."""
        graph, _ = convert_process_xml(sample_xml, schema, base_namespace="urn:other:")
        assert all(s.subject.value.startswith("urn:other:") for s in graph)

    def test_syntax_error_has_line(self, schema):
        """Ill-formed XML reports the line of the error."""
        with pytest.raises(XmlSyntaxError) as excinfo:
            convert_process_xml("<model>\n<entity id='a' type='Role'>\n</model>", schema)
        assert excinfo.value.line_number == 3

    def test_wrong_root(self, schema):
        """The root element must be <model>."""
        with pytest.raises(InvalidProcessXml):
            convert_process_xml("<process/>", schema)

    def test_duplicate_id(self, schema):
        """Entity ids are unique within a document."""
        doc = '<model><entity id="a" type="Role"/><entity id="a" type="Activity"/></model>'
        with pytest.raises(DuplicateEntityId):
            convert_process_xml(doc, schema)

    @pytest.mark.parametrize(
        "doc",
        [
            '<model><entity type="Role"/></model>',
            '<model><entity id="a"/></model>',
            '<model><entity id="a b" type="Role"/></model>',
        ],
    )
    def test_invalid_entity(self, schema, doc):
        """Entities need a usable id and a type."""
        with pytest.raises(InvalidProcessXml):
            convert_process_xml(doc, schema)

    def test_warnings(self, schema):
        """Unknown vocabulary is reported and skipped; unknown types are kept."""
        doc = _entity(
            '<property name="colour">red</property>'
            '<ref name="likes" target="b"/>'
            '<ref name="uses"/>'
            '<ref name="uses" target="missing"/>'
            "<note>free text</note>",
            type_name="Meeting",
        )
        graph, warnings = convert_process_xml(doc, schema)
        assert len(warnings) == 6
        assert any("unknown type 'Meeting'" in w for w in warnings)
        assert any("dangling reference uses -> missing" in w for w in warnings)
        a1 = schema.entity_iri("a1")
        assert graph.objects(a1, schema.type_predicate) == {schema.type_iri("Meeting")}
        assert graph.objects(a1, schema.predicate("uses")) == {schema.entity_iri("missing")}

    def test_ignored_top_level_element(self, schema):
        """Elements other than <entity> under <model> are ignored with a warning."""
        graph, warnings = convert_process_xml("<model><meta/></model>", schema)
        assert len(graph) == 0
        assert warnings == ["ignored element <meta>"]

    def test_parse_logs_warnings(self, schema, caplog):
        """parse_process_xml logs conversion warnings."""
        parse_process_xml(_entity('<property name="colour">red</property>'), schema)
        assert "unknown property 'colour'" in caplog.text

    def test_text_is_nfc(self, schema):
        """Property text is normalized like every literal."""
        doc = _entity('<property name="name">Cafe\u0301</property>')
        graph, _ = convert_process_xml(doc, schema)
        assert graph.objects(schema.entity_iri("a1"), schema.predicate("name")) == {
            Literal("Caf\u00e9")
        }

    def test_empty_language_is_none(self, schema):
        """An empty xml:lang declares no language."""
        doc = _entity('<property name="name" xml:lang="">Plan</property>')
        graph, warnings = convert_process_xml(doc, schema)
        assert warnings == []
        assert graph.objects(schema.entity_iri("a1"), schema.predicate("name")) == {
            Literal("Plan")
        }


class TestRenderProcessXml:
    """Tests for writing entity records back to XML."""

    def test_round_trip_sample(self, schema, sample_xml):
        """Rendering the entities of a graph converts back to the same graph."""
        graph, _ = convert_process_xml(sample_xml, schema)
        rendered = render_process_xml(entities_from_graph(graph, schema))
        assert convert_process_xml(rendered, schema)[0] == graph

    def test_special_characters(self, schema):
        """Markup characters, quotes and control whitespace survive."""
        text = 'if a < b && c > "d"\r\n\tdone '
        record = EntityRecord(
            "x-1",
            "Product",
            (("description", Literal(text, "de")), ("name", Literal("  spaced  "))),
            (("uses", "y.2"),),
        )
        graph, warnings = convert_process_xml(render_process_xml([record]), schema)
        assert any("dangling" in w for w in warnings)
        assert entities_from_graph(graph, schema) == [record]

    def test_entities_sorted(self, schema, sample_xml):
        """Entity records come out sorted by id."""
        graph, _ = convert_process_xml(sample_xml, schema)
        assert [e.id for e in entities_from_graph(graph, schema)] == ["a1", "p1", "pm1", "r1"]


class TestReadMetadata:
    """Tests for versions.tsv."""

    def test_with_header(self, tmp_path):
        """A header line is skipped; the release column is optional."""
        path = tmp_path / "versions.tsv"
        path.write_text(
            "version\ttimestamp\tauthor\tcomment\trelease\n"
            "1\t2005-01-03T09:00:00Z\tann\tfirst\t\n"
            "2\t2005-01-04T09:00:00Z\tbob\tsecond\\tline\tR1\n"
            "3\t\tcid\tno time\n"
        )
        metas = read_metadata(path)
        assert sorted(metas) == [1, 2, 3]
        assert metas[1].release is None
        assert metas[2].release == "R1"
        assert metas[2].comment == "second\tline"
        assert metas[3].timestamp is None

    @pytest.mark.parametrize(
        "text",
        [
            "1\t2005-01-03\tann\n",
            "1\tyesterday\tann\tx\n",
            "1\t\tann\tx\n1\t\tbob\ty\n",
        ],
    )
    def test_bad_rows(self, tmp_path, text):
        """Short rows, bad timestamps and duplicate versions are errors."""
        path = tmp_path / "versions.tsv"
        path.write_text(text)
        with pytest.raises(ParseError):
            read_metadata(path)


class TestIngestCorpus:
    """Tests for loading a corpus directory."""

    def test_report(self, tmp_path, corpus_dir):
        """Malformed versions are skipped and reported."""
        repo, report = ingest_corpus(corpus_dir, repo_dir=tmp_path / "repo")
        assert report.attempted == 24
        assert report.loaded == 23
        assert [name for name, _ in report.failed] == ["0006.xml"]
        assert 6 not in repo.versions
        assert repo.meta(12).release == "R1"
        assert repo.meta(1).author.startswith("author")

    def test_stored_versions(self, corpus_dir, small_corpus):
        """Stored versions are exactly the well-formed generated versions."""
        repo, _ = ingest_corpus(corpus_dir)
        assert sorted(small_corpus.entity_counts) == repo.versions

    def test_parallel_matches_sequential(self, tmp_path, corpus_dir):
        """Worker processes give byte-identical repositories."""
        ingest_corpus(corpus_dir, repo_dir=tmp_path / "seq", snapshot_interval=4)
        ingest_corpus(corpus_dir, repo_dir=tmp_path / "par", workers=3, snapshot_interval=4)
        names = sorted(p.name for p in (tmp_path / "seq").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "par").iterdir())
        for name in names:
            assert (tmp_path / "seq" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()

    def test_missing_corpus(self, tmp_path):
        """Absent or empty corpus directories are errors."""
        with pytest.raises(MissingCorpus):
            ingest_corpus(tmp_path / "nope")
        with pytest.raises(MissingCorpus):
            ingest_corpus(tmp_path)

    def test_metadata_mismatch(self, tmp_path, sample_xml):
        """Metadata rows need a version file."""
        (tmp_path / "0001.xml").write_text(sample_xml)
        (tmp_path / "versions.tsv").write_text("1\t\tann\tx\n2\t\tbob\ty\n")
        with pytest.raises(MetadataMismatch):
            ingest_corpus(tmp_path)

    def test_missing_metadata(self, tmp_path, sample_xml):
        """Without versions.tsv versions carry no metadata."""
        (tmp_path / "0001.xml").write_text(sample_xml)
        (tmp_path / "0003.xml").write_text(sample_xml)
        repo, report = ingest_corpus(tmp_path)
        assert report.loaded == 2
        assert repo.versions == [1, 3]
        assert repo.meta(3).timestamp is None

    def test_timestamp_regression_warning(self, tmp_path, sample_xml):
        """Out-of-order timestamps are loaded with a warning."""
        for name in ("1.xml", "2.xml"):
            (tmp_path / name).write_text(sample_xml)
        (tmp_path / "versions.tsv").write_text(
            "1\t2005-01-03T09:00:00Z\tann\tx\n2\t2005-01-02T09:00:00Z\tbob\ty\n"
        )
        _, report = ingest_corpus(tmp_path)
        assert report.loaded == 2
        assert [name for name, _ in report.warnings] == ["2.xml"]

    def test_statement_identity_across_versions(self, tmp_path, sample_xml, schema):
        """Unchanged entities give identical statements in every version."""
        (tmp_path / "0001.xml").write_text(sample_xml)
        (tmp_path / "0002.xml").write_text(sample_xml.replace("Project leader", "Lead"))
        repo, _ = ingest_corpus(tmp_path)
        changed = repo.checkout(1).statements ^ repo.checkout(2).statements
        assert {s.subject for s in changed} == {schema.entity_iri("r1")}
        assert len(changed) == 2
