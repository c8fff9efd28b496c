"""Tests for the version repository."""

from datetime import datetime, timedelta, timezone

import pytest

from process_evolution.changes import ChangeKind, ChangeRecord
from process_evolution.errors import (
    DuplicateVersion,
    InvalidConfig,
    MissingRepository,
    NonMonotonicVersion,
    ParseError,
    UnknownVersion,
)
from process_evolution.generator import XorShift64Star
from process_evolution.graph import Graph, Iri, Literal, Statement
from process_evolution.ntriples import serialize_graph
from process_evolution.repository import (
    META_FILE,
    VersionMeta,
    VersionRepository,
    escape_tsv_field,
    format_timestamp,
    open_or_fail,
    parse_timestamp,
    unescape_tsv_field,
)

T0 = datetime(2007, 5, 1, 12, 0, tzinfo=timezone.utc)


def _statement(i: int, text: str = "v") -> Statement:
    return Statement(Iri(f"urn:e:{i}"), Iri("urn:p:name"), Literal(f"{text}{i}"))


def _history(count: int, size: int = 100, churn: int = 3, seed: int = 11) -> list[Graph]:
    """Graphs where each version replaces ``churn`` random statements."""
    rng = XorShift64Star(seed)
    current = {i: _statement(i) for i in range(size)}
    graphs = [Graph(current.values())]
    for version in range(2, count + 1):
        for _ in range(churn):
            i = rng.below(size)
            current[i] = _statement(i, f"v{version}-")
        graphs.append(Graph(current.values()))
    return graphs


class TestTsvFields:
    """Tests for metadata field escaping and timestamps."""

    def test_escape_round_trip(self):
        """Tabs, newlines and backslashes survive a round trip."""
        text = "a\tb\nc\\d\re"
        assert "\t" not in escape_tsv_field(text)
        assert unescape_tsv_field(escape_tsv_field(text)) == text

    def test_bad_escape(self):
        """Unknown escapes are rejected."""
        with pytest.raises(ValueError):
            unescape_tsv_field("a\\x")

    def test_timestamps(self):
        """Naive timestamps are UTC; output uses a Z suffix."""
        assert parse_timestamp("2007-05-01T12:00:00") == T0
        assert parse_timestamp("2007-05-01T14:00:00+02:00") == T0
        assert format_timestamp(T0) == "2007-05-01T12:00:00Z"
        assert parse_timestamp(format_timestamp(T0)) == T0


class TestCommitAndCheckout:
    """Tests for committing and reconstructing versions."""

    def test_in_memory(self):
        """A repository without a path keeps everything in memory."""
        repo = VersionRepository(snapshot_interval=3)
        graphs = _history(8)
        for version, graph in enumerate(graphs, start=1):
            repo.commit(graph, VersionMeta(version))
        assert repo.versions == list(range(1, 9))
        assert repo.head_version == 8
        for version, graph in enumerate(graphs, start=1):
            assert repo.checkout(version) == graph

    def test_gaps_are_allowed(self):
        """Version numbers increase but need not be contiguous."""
        repo = VersionRepository()
        assert repo.commit(Graph([_statement(1)]), VersionMeta(1)) == 1
        assert repo.commit(Graph([_statement(2)]), VersionMeta(5)) == 5
        assert repo.versions == [1, 5]
        with pytest.raises(UnknownVersion):
            repo.checkout(3)

    def test_duplicate_and_lower_versions(self):
        """Versions are strictly increasing."""
        repo = VersionRepository()
        repo.commit(Graph(), VersionMeta(2))
        with pytest.raises(DuplicateVersion):
            repo.commit(Graph(), VersionMeta(2))
        with pytest.raises(NonMonotonicVersion):
            repo.commit(Graph(), VersionMeta(1))

    def test_version_numbers_start_at_one(self):
        """Version 0 is not a version."""
        with pytest.raises(ValueError):
            VersionMeta(0)

    def test_iter_versions_range(self):
        """iter_versions walks an inclusive range in order."""
        repo = VersionRepository(snapshot_interval=4)
        graphs = _history(10)
        for version, graph in enumerate(graphs, start=1):
            repo.commit(graph, VersionMeta(version))
        walked = [(m.version, g) for m, g in repo.iter_versions(3, 7)]
        assert [v for v, _ in walked] == [3, 4, 5, 6, 7]
        assert all(g == graphs[v - 1] for v, g in walked)

    def test_timestamp_regressions(self):
        """Decreasing timestamps are reported, not rejected."""
        repo = VersionRepository()
        repo.commit(Graph(), VersionMeta(1, T0))
        repo.commit(Graph(), VersionMeta(2, T0 - timedelta(hours=1)))
        repo.commit(Graph(), VersionMeta(3, T0 + timedelta(hours=1)))
        assert repo.timestamp_regressions() == [(1, 2)]


class TestPersistence:
    """Tests for the on-disk layout."""

    def test_reopen(self, tmp_path):
        """A reopened repository has the same versions and metadata."""
        repo = VersionRepository.create(tmp_path / "repo", snapshot_interval=4)
        graphs = _history(9)
        for version, graph in enumerate(graphs, start=1):
            meta = VersionMeta(
                version,
                T0 + timedelta(days=version),
                "alice",
                "line one\nline\ttwo",
                "R1" if version == 5 else None,
            )
            repo.commit(graph, meta)

        reopened = VersionRepository.open(tmp_path / "repo")
        assert reopened.metas == repo.metas
        assert reopened.meta(5).release == "R1"
        assert reopened.meta(2).comment == "line one\nline\ttwo"
        for version, graph in enumerate(graphs, start=1):
            assert reopened.checkout(version) == graph

    def test_snapshot_spacing(self, tmp_path):
        """Every n-th version is stored as a full snapshot."""
        repo = VersionRepository.create(tmp_path, snapshot_interval=3)
        for version, graph in enumerate(_history(7), start=1):
            repo.commit(graph, VersionMeta(version))
        snapshots = sorted(p.name for p in tmp_path.glob("*.snap"))
        assert snapshots == ["v0001.snap", "v0004.snap", "v0007.snap"]
        assert len(list(tmp_path.glob("*.delta"))) == 4

    def test_create_clears_previous_repository(self, tmp_path):
        """Creating over an old repository starts empty."""
        repo = VersionRepository.create(tmp_path)
        repo.commit(Graph([_statement(1)]), VersionMeta(1))
        VersionRepository.create(tmp_path)
        assert len(VersionRepository.open(tmp_path)) == 0
        assert not list(tmp_path.glob("*.snap"))

    def test_missing_repository(self, tmp_path):
        """Opening a directory without a repository fails."""
        with pytest.raises(MissingRepository):
            VersionRepository.open(tmp_path)
        with pytest.raises(InvalidConfig):
            open_or_fail(None)

    def test_corrupt_metadata(self, tmp_path):
        """A broken metadata table names its line."""
        repo = VersionRepository.create(tmp_path)
        repo.commit(Graph(), VersionMeta(1))
        meta_path = tmp_path / META_FILE
        meta_path.write_text(meta_path.read_text() + "2\tnot-a-time\t\t\t\tdelta\n")
        with pytest.raises(ParseError) as excinfo:
            VersionRepository.open(tmp_path)
        assert excinfo.value.line_number == 3

    def test_deterministic_files(self, tmp_path):
        """The same commits produce byte-identical repository files."""
        for name in ("a", "b"):
            repo = VersionRepository.create(tmp_path / name, snapshot_interval=5)
            for version, graph in enumerate(_history(12), start=1):
                repo.commit(graph, VersionMeta(version, T0 + timedelta(hours=version)))
        files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert files_a == sorted(p.name for p in (tmp_path / "b").iterdir())
        for name in files_a:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_storage_is_compressed(self, tmp_path):
        """Low-churn histories take a fraction of the full-snapshot size."""
        graphs = _history(600, size=100, churn=3)
        repo = VersionRepository.create(tmp_path, snapshot_interval=20)
        for version, graph in enumerate(graphs, start=1):
            repo.commit(graph, VersionMeta(version))
        full = sum(len(serialize_graph(g).encode("utf-8")) for g in graphs)
        assert repo.storage_bytes() < 0.25 * full
        reopened = VersionRepository.open(tmp_path)
        for (meta, graph), expected in zip(reopened.iter_versions(), graphs):
            assert graph == expected, meta.version
        for version in (1, 19, 20, 21, 333, 600):
            assert reopened.checkout(version) == graphs[version - 1]


class TestChangeRecordStore:
    """Tests for storing and loading change records."""

    def _repo(self, schema, make_graph):
        repo = VersionRepository(schema=schema)
        v1 = {"pm1": ("ProcessModule", {}, [("contains", "a1")]), "a1": ("Activity", {}, [])}
        v2 = dict(v1, r1=("Role", {}, []))
        v3 = dict(v2, pm2=("ProcessModule", {}, [("contains", "r1")]))
        for version, model in ((1, v1), (2, v2), (3, v3)):
            repo.commit(make_graph(model), VersionMeta(version))
        return repo

    def test_filters(self, schema, make_graph):
        """Records can be filtered by version range, kind and module."""
        repo = self._repo(schema, make_graph)
        added_r1 = ChangeRecord(ChangeKind.ENTITY_ADDED, 1, 2, schema.entity_iri("r1"))
        added_pm2 = ChangeRecord(ChangeKind.ENTITY_ADDED, 2, 3, schema.entity_iri("pm2"))
        contains = ChangeRecord(
            ChangeKind.RELATION_ADDED,
            2,
            3,
            schema.entity_iri("pm2"),
            schema.predicate("contains"),
            schema.entity_iri("r1"),
            entailed=True,
        )
        repo.store_change_records([added_pm2, contains, added_r1])
        assert repo.load_change_records() == [added_r1, added_pm2, contains]
        assert repo.load_change_records(versions=(3, 3)) == [added_pm2, contains]
        assert repo.load_change_records(kinds=[ChangeKind.RELATION_ADDED]) == [contains]
        # r1 was added in no module, but belongs to pm2 by version 3
        assert repo.load_change_records(module=schema.entity_iri("pm2")) == []
        late = ChangeRecord(ChangeKind.ENTITY_DELETED, 2, 3, schema.entity_iri("a1"))
        repo.store_change_records([late])
        assert repo.load_change_records(module=schema.entity_iri("pm1")) == [late]

    def test_store_is_idempotent(self, schema, make_graph):
        """Storing the same records twice keeps one copy."""
        repo = self._repo(schema, make_graph)
        record = ChangeRecord(ChangeKind.ENTITY_ADDED, 1, 2, schema.entity_iri("r1"))
        repo.store_change_records([record])
        repo.store_change_records([record])
        assert repo.load_change_records() == [record]

    def test_unknown_version(self, schema, make_graph):
        """Records must refer to stored versions."""
        repo = self._repo(schema, make_graph)
        with pytest.raises(UnknownVersion):
            repo.store_change_records([ChangeRecord(ChangeKind.ENTITY_ADDED, 3, 4, Iri("urn:x"))])
