"""Version repository: an append-only, totally ordered store of graph versions.

On-disk layout of a repository directory::

    meta.tsv        version, timestamp, author, comment, release, storage
    vNNNN.snap      full canonical N-Triples of a snapshot version
    vNNNN.delta     changed statements against the previous stored version
    changes.nt      encoded change records (after change detection)
    schema.yaml     process schema the versions were converted with

Every ``snapshot_interval``-th stored version is a full snapshot; the others
are deltas without Common lines. A checkout replays deltas from the nearest
earlier snapshot.
"""

import bisect
import logging
import os
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .changes import (
    ChangeKind,
    ChangeRecord,
    decode_changes_from_graph,
    encode_changes_as_graph,
)
from .comparison import apply_delta, compare, export_comparison, parse_comparison
from .errors import (
    DuplicateVersion,
    InvalidConfig,
    MissingRepository,
    NonMonotonicVersion,
    ParseError,
    UnknownVersion,
)
from .graph import Graph, Iri
from .membership import attribute_records
from .ntriples import parse_graph, serialize_graph
from .schema import ProcessSchema

logger = logging.getLogger(__name__)

META_FILE = "meta.tsv"
CHANGES_FILE = "changes.nt"
SCHEMA_FILE = "schema.yaml"
META_COLUMNS = ["version", "timestamp", "author", "comment", "release", "storage"]
DEFAULT_SNAPSHOT_INTERVAL = 20

_TSV_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_TSV_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def escape_tsv_field(text: str) -> str:
    return "".join(_TSV_ESCAPES.get(ch, ch) for ch in text)


def unescape_tsv_field(text: str) -> str:
    out = []
    chars = iter(text)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, "")
            if nxt not in _TSV_UNESCAPES:
                raise ValueError(f"invalid escape sequence \\{nxt}")
            out.append(_TSV_UNESCAPES[nxt])
        else:
            out.append(ch)
    return "".join(out)


def parse_timestamp(text: str) -> datetime:
    """Parse an ISO-8601 timestamp; values without an offset are taken as UTC."""
    value = datetime.fromisoformat(text.strip().replace("Z", "+00:00"))
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    return value


def format_timestamp(value: datetime) -> str:
    return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class VersionMeta:
    """Metadata of one stored version.

    Attributes:
        version: Positive version number.
        timestamp: Commit time, if known.
        author: Author of the version.
        comment: Free-form comment.
        release: Release label if the version was an official release.
    """

    version: int
    timestamp: datetime | None = None
    author: str = ""
    comment: str = ""
    release: str | None = None

    def __post_init__(self) -> None:
        if self.version < 1:
            raise ValueError(f"version numbers start at 1, got {self.version}")

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "timestamp": format_timestamp(self.timestamp) if self.timestamp else None,
            "author": self.author,
            "comment": self.comment,
            "release": self.release,
        }


class VersionRepository:
    """Ordered store of graph versions with their metadata.

    A repository without a path lives in memory only; it keeps snapshot and
    delta texts in dictionaries instead of files.
    """

    def __init__(
        self,
        path: Path | None = None,
        schema: ProcessSchema | None = None,
        snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL,
    ):
        if snapshot_interval < 1:
            raise ValueError("snapshot_interval must be positive")
        self.path = Path(path) if path is not None else None
        self.schema = schema or ProcessSchema()
        self.snapshot_interval = snapshot_interval
        self._metas: list[VersionMeta] = []
        self._storage: dict[int, str] = {}
        self._blobs: dict[str, str] = {}
        self._head: Graph | None = None
        self._changes: Graph | None = None

    @classmethod
    def create(
        cls,
        path: Path,
        schema: ProcessSchema | None = None,
        snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL,
    ) -> "VersionRepository":
        """Create an empty repository directory, clearing a previous repository there."""
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        for old in [*path.glob("v*.snap"), *path.glob("v*.delta")]:
            old.unlink()
        for name in (META_FILE, CHANGES_FILE):
            (path / name).unlink(missing_ok=True)
        repo = cls(path, schema, snapshot_interval)
        repo.schema.save(path / SCHEMA_FILE)
        repo._write_meta()
        logger.info("Created repository at %s", path)
        return repo

    @classmethod
    def open(
        cls, path: Path, snapshot_interval: int = DEFAULT_SNAPSHOT_INTERVAL
    ) -> "VersionRepository":
        """Open an existing repository directory.

        Raises:
            MissingRepository: If ``path`` holds no repository.
        """
        path = Path(path)
        meta_path = path / META_FILE
        if not meta_path.is_file():
            raise MissingRepository(f"no version repository at {path}")
        schema_path = path / SCHEMA_FILE
        schema = ProcessSchema.load(schema_path) if schema_path.is_file() else None
        repo = cls(path, schema, snapshot_interval)
        repo._read_meta(meta_path)
        logger.debug("Opened repository %s with %d versions", path, len(repo))
        return repo

    def __len__(self) -> int:
        return len(self._metas)

    @property
    def versions(self) -> list[int]:
        return [m.version for m in self._metas]

    @property
    def metas(self) -> list[VersionMeta]:
        return list(self._metas)

    @property
    def head_version(self) -> int | None:
        return self._metas[-1].version if self._metas else None

    def meta(self, version: int) -> VersionMeta:
        return self._metas[self._position(version)]

    def _position(self, version: int) -> int:
        i = bisect.bisect_left(self._metas, version, key=lambda m: m.version)
        if i == len(self._metas) or self._metas[i].version != version:
            raise UnknownVersion(f"version {version} is not stored")
        return i

    # Storage primitives

    def _blob_name(self, version: int) -> str:
        return f"v{version:04d}.{self._storage[version]}"

    def _write_blob(self, name: str, text: str) -> None:
        if self.path is None:
            self._blobs[name] = text
        else:
            (self.path / name).write_text(text, encoding="utf-8")

    def _read_blob(self, name: str) -> str:
        if self.path is None:
            return self._blobs[name]
        return (self.path / name).read_text(encoding="utf-8")

    def _write_meta(self) -> None:
        if self.path is None:
            return
        lines = ["\t".join(META_COLUMNS)]
        for m in self._metas:
            fields = [
                str(m.version),
                format_timestamp(m.timestamp) if m.timestamp else "",
                escape_tsv_field(m.author),
                escape_tsv_field(m.comment),
                escape_tsv_field(m.release or ""),
                self._storage[m.version],
            ]
            lines.append("\t".join(fields))
        tmp = self.path / f"{META_FILE}.tmp"
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, self.path / META_FILE)

    def _read_meta(self, meta_path: Path) -> None:
        lines = meta_path.read_text(encoding="utf-8").split("\n")
        if lines[0].split("\t") != META_COLUMNS:
            raise ParseError(1, "unexpected repository metadata header", str(meta_path))
        for number, line in enumerate(lines[1:], start=2):
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(META_COLUMNS):
                raise ParseError(number, f"expected {len(META_COLUMNS)} fields", str(meta_path))
            try:
                meta = VersionMeta(
                    version=int(fields[0]),
                    timestamp=parse_timestamp(fields[1]) if fields[1] else None,
                    author=unescape_tsv_field(fields[2]),
                    comment=unescape_tsv_field(fields[3]),
                    release=unescape_tsv_field(fields[4]) or None,
                )
            except ValueError as err:
                raise ParseError(number, str(err), str(meta_path)) from err
            if fields[5] not in ("snap", "delta"):
                raise ParseError(number, f"unknown storage kind {fields[5]!r}", str(meta_path))
            self._metas.append(meta)
            self._storage[meta.version] = fields[5]
        if self._metas and self._storage[self._metas[0].version] != "snap":
            raise ParseError(2, "first stored version must be a snapshot", str(meta_path))

    # Versions

    def commit(self, graph: Graph, meta: VersionMeta) -> int:
        """Append a version and return its number.

        Raises:
            DuplicateVersion: If the version number is already stored.
            NonMonotonicVersion: If it is lower than the latest stored version.
        """
        head = self.head_version
        if head is not None:
            if meta.version == head or meta.version in self._storage:
                raise DuplicateVersion(f"version {meta.version} is already stored")
            if meta.version < head:
                raise NonMonotonicVersion(
                    f"version {meta.version} is lower than the latest version {head}"
                )
        position = len(self._metas)
        if position % self.snapshot_interval == 0:
            storage, text = "snap", serialize_graph(graph)
        else:
            previous = self._head if self._head is not None else self.checkout(head)
            delta = compare(previous, graph, head, meta.version).without_common()
            storage, text = "delta", export_comparison(delta)
        self._storage[meta.version] = storage
        self._metas.append(meta)
        self._write_blob(self._blob_name(meta.version), text)
        self._write_meta()
        self._head = graph
        logger.debug(
            "Committed version %d as %s (%d statements)", meta.version, storage, len(graph)
        )
        return meta.version

    def checkout(self, version: int) -> Graph:
        """The graph stored as ``version``.

        Raises:
            UnknownVersion: If the version is not stored.
        """
        position = self._position(version)
        if position == len(self._metas) - 1 and self._head is not None:
            return self._head
        start = position
        while self._storage[self._metas[start].version] != "snap":
            start -= 1
        graph = self._load_snapshot(self._metas[start].version)
        for m in self._metas[start + 1 : position + 1]:
            graph = self._apply_stored_delta(graph, m.version)
        return graph

    def _load_snapshot(self, version: int) -> Graph:
        name = self._blob_name(version)
        return parse_graph(self._read_blob(name), source=name)

    def _apply_stored_delta(self, graph: Graph, version: int) -> Graph:
        name = self._blob_name(version)
        delta = parse_comparison(self._read_blob(name), source=name, target_version=version)
        return apply_delta(graph, delta, partial=True)

    def iter_versions(
        self, start: int | None = None, end: int | None = None
    ) -> Iterator[tuple[VersionMeta, Graph]]:
        """Yield (meta, graph) for stored versions in [start, end], in order.

        Deltas are replayed incrementally, so iterating the whole history
        costs one pass over the stored files.
        """
        graph: Graph | None = None
        for m in self._metas:
            if start is not None and m.version < start:
                continue
            if end is not None and m.version > end:
                break
            if graph is None:
                graph = self.checkout(m.version)
            elif self._storage[m.version] == "snap":
                graph = self._load_snapshot(m.version)
            else:
                graph = self._apply_stored_delta(graph, m.version)
            yield m, graph

    def timestamp_regressions(self) -> list[tuple[int, int]]:
        """Consecutive (earlier, later) version pairs whose timestamps decrease."""
        regressions = []
        for a, b in zip(self._metas, self._metas[1:]):
            if a.timestamp and b.timestamp and b.timestamp < a.timestamp:
                regressions.append((a.version, b.version))
        return regressions

    def storage_bytes(self) -> int:
        """Total size of stored snapshot and delta texts."""
        return sum(
            len(self._read_blob(self._blob_name(m.version)).encode("utf-8")) for m in self._metas
        )

    # Change records

    @property
    def has_change_records(self) -> bool:
        if self.path is None:
            return self._changes is not None
        return (self.path / CHANGES_FILE).is_file()

    def store_change_records(self, records: Iterable[ChangeRecord], replace: bool = False) -> None:
        """Persist change records; storing the same records again is a no-op.

        Raises:
            UnknownVersion: If a record refers to a version that is not stored.
        """
        records = list(records)
        for r in records:
            self._position(r.from_version)
            self._position(r.to_version)
        encoded = encode_changes_as_graph(records)
        if not replace and self.has_change_records:
            encoded = self._change_graph().union(encoded)
        self._changes = encoded
        if self.path is not None:
            tmp = self.path / f"{CHANGES_FILE}.tmp"
            tmp.write_text(serialize_graph(encoded), encoding="utf-8")
            os.replace(tmp, self.path / CHANGES_FILE)
        logger.info("Stored %d change records", len(records))

    def _change_graph(self) -> Graph:
        if self._changes is None and self.path is not None:
            path = self.path / CHANGES_FILE
            self._changes = parse_graph(path.read_text(encoding="utf-8"), source=str(path))
        return self._changes if self._changes is not None else Graph()

    def load_change_records(
        self,
        versions: tuple[int, int] | None = None,
        kinds: Iterable[ChangeKind] | None = None,
        module: Iri | None = None,
    ) -> list[ChangeRecord]:
        """Stored change records, filtered and in canonical order.

        Args:
            versions: Inclusive (first, last) range the record's target version must fall in.
            kinds: Only records of these kinds.
            module: Only records attributed to this module.
        """
        records = decode_changes_from_graph(self._change_graph())
        if versions is not None:
            first, last = versions
            records = [r for r in records if first <= r.to_version <= last]
        if kinds is not None:
            wanted = set(kinds)
            records = [r for r in records if r.kind in wanted]
        if module is not None:
            records = [
                r
                for r, modules in attribute_records(records, self.history(), self.schema)
                if module in modules
            ]
            records.sort(key=ChangeRecord.sort_key)
        return records

    def history(self) -> Iterator[tuple[int, Graph]]:
        """(version, graph) pairs in version order."""
        for meta, graph in self.iter_versions():
            yield meta.version, graph


def open_or_fail(path: Path | str | None) -> VersionRepository:
    """Open the repository at ``path``, with a config error when no path is given."""
    if path is None:
        raise InvalidConfig("no repository given (use --repo or PROCESS_EVOLUTION_REPO)")
    return VersionRepository.open(Path(path))
