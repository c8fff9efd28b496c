"""Evolution metrics computed from a version repository and its change records."""

import logging
from collections import Counter, defaultdict
from collections.abc import Iterable
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum

from .changes import DEFAULT_KINDS, ChangeKind, ChangeRecord
from .errors import MissingChangeRecords, MissingTimestamps, UnknownModule
from .graph import Iri
from .membership import (
    attribute_records,
    containment_graph,
    members_of,
    module_entities,
    typed_entities,
)
from .repository import VersionRepository

logger = logging.getLogger(__name__)

TOTAL = "total"
UNASSIGNED = "unassigned"
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


class XAxis(Enum):
    VERSION = "version"
    TIME = "time"

    @property
    def column(self) -> str:
        return "version" if self is XAxis.VERSION else "timestamp"


@dataclass(frozen=True)
class MetricSeries:
    """One group's values along the version or calendar axis.

    Attributes:
        name: Metric name (e.g. "entities", "changes").
        x_axis: Version number or calendar time.
        group: Module id, "total" or "unassigned".
        points: (x, value) pairs sorted by x, one per x.
    """

    name: str
    x_axis: XAxis
    group: str
    points: tuple[tuple[int | datetime, float], ...]

    def __post_init__(self) -> None:
        xs = [x for x, _ in self.points]
        if any(a >= b for a, b in zip(xs, xs[1:])):
            raise ValueError(f"points of series {self.group!r} must be sorted by x and unique")
        if any(value < 0 for _, value in self.points):
            raise ValueError("metric values must be non-negative")

    def value_at(self, x: int | datetime) -> float | None:
        for px, value in self.points:
            if px == x:
                return value
        return None


@dataclass(frozen=True)
class ChangeMatrix:
    """Which entities of one module changed at which version.

    Attributes:
        module: Module IRI.
        module_id: Module id (local name).
        rows: Entities ever contained in the module, by first appearance.
        cells: (row index, version, change count) sorted by row then version.
        versions: All stored version numbers (the x range).
    """

    module: Iri
    module_id: str
    rows: tuple[Iri, ...]
    cells: tuple[tuple[int, int, int], ...]
    versions: tuple[int, ...]

    def __post_init__(self) -> None:
        for row, _, count in self.cells:
            if not 0 <= row < len(self.rows) or count < 1:
                raise ValueError(f"invalid matrix cell {(row, count)}")


@dataclass(frozen=True)
class ReleaseConcentration:
    """Mean per-version change counts inside and outside release windows."""

    radius: int
    inside_versions: int
    outside_versions: int
    inside_mean: float
    outside_mean: float

    @property
    def ratio(self) -> float | None:
        if self.outside_mean == 0:
            return None
        return self.inside_mean / self.outside_mean

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "inside_versions": self.inside_versions,
            "outside_versions": self.outside_versions,
            "inside_mean": self.inside_mean,
            "outside_mean": self.outside_mean,
            "ratio": self.ratio,
        }


def _series(name: str, x_axis: XAxis, values: dict[str, dict]) -> list[MetricSeries]:
    return [
        MetricSeries(name, x_axis, group, tuple(sorted(points.items())))
        for group, points in sorted(values.items(), key=lambda item: _group_order(item[0]))
    ]


def _group_order(group: str) -> tuple[int, str]:
    return ({UNASSIGNED: 1, TOTAL: 2}.get(group, 0), group)


def entity_count_series(repo: VersionRepository) -> list[MetricSeries]:
    """Entities per module along the version history.

    Modules are containers and are not counted as entities. An entity in
    several modules counts once per module; "total" is the sum over all
    groups including "unassigned". Modules get points only at versions where
    they exist.
    """
    schema = repo.schema
    values: dict[str, dict[int, float]] = defaultdict(dict)
    for meta, graph in repo.iter_versions():
        modules = module_entities(graph, schema)
        entities = typed_entities(graph, schema) - modules
        containment = containment_graph(graph, schema)
        assigned: set[Iri] = set()
        total = 0
        for module in modules:
            members = members_of(containment, module) & entities
            assigned |= members
            values[schema.local_name(module)][meta.version] = len(members)
            total += len(members)
        unassigned = len(entities - assigned)
        values[UNASSIGNED][meta.version] = unassigned
        values[TOTAL][meta.version] = total + unassigned
    return _series("entities", XAxis.VERSION, values)


def _require_records(repo: VersionRepository) -> None:
    if not repo.has_change_records:
        raise MissingChangeRecords("no change records stored; run change detection first")


def _selected_records(
    repo: VersionRepository, kinds: Iterable[ChangeKind] | None, include_entailed: bool
) -> list[ChangeRecord]:
    _require_records(repo)
    records = repo.load_change_records(kinds=DEFAULT_KINDS if kinds is None else kinds)
    if not include_entailed:
        records = [r for r in records if not r.entailed]
    return records


def _timestamp(repo: VersionRepository, version: int) -> datetime:
    timestamp = repo.meta(version).timestamp
    if timestamp is None:
        raise MissingTimestamps(f"version {version} has no timestamp")
    return timestamp


def change_distribution(
    repo: VersionRepository,
    x_axis: XAxis = XAxis.VERSION,
    kinds: Iterable[ChangeKind] | None = None,
    include_entailed: bool = False,
    count: str = "records",
) -> list[MetricSeries]:
    """Changes per module along the version history or calendar time.

    Each record counts for the modules of its entity at the later version
    of its pair (deleted entities keep their earlier modules); records of
    entities in no module count as "unassigned".

    Args:
        repo: Repository with stored change records.
        x_axis: Place counts at the target version number or its timestamp.
        kinds: Change kinds to count (default: text changes, additions, deletions).
        include_entailed: Also count relation changes entailed by entity changes.
        count: "records" counts change records, "entities" distinct changed entities.

    Raises:
        MissingChangeRecords: If change detection has not been run.
        MissingTimestamps: If a calendar axis is requested and a version lacks a timestamp.
    """
    if count not in ("records", "entities"):
        raise ValueError(f"count must be 'records' or 'entities', got {count!r}")
    records = _selected_records(repo, kinds, include_entailed)
    schema = repo.schema
    tallies: dict[str, dict] = defaultdict(Counter)
    seen: set[tuple] = set()
    for record, modules in attribute_records(records, repo.history(), schema):
        x = record.to_version if x_axis is XAxis.VERSION else _timestamp(repo, record.to_version)
        groups = [schema.local_name(m) for m in modules] or [UNASSIGNED]
        for group in groups:
            if count == "entities":
                key = (group, x, record.entity)
                if key in seen:
                    continue
                seen.add(key)
            tallies[group][x] += 1
    return _series("changes", x_axis, {g: dict(c) for g, c in tallies.items()})


def _floor(timestamp: datetime, width: timedelta) -> datetime:
    return EPOCH + ((timestamp - EPOCH) // width) * width


def version_density(
    repo: VersionRepository, bin_width: timedelta = timedelta(days=1)
) -> MetricSeries:
    """Number of versions per calendar bin.

    Bins are aligned to multiples of ``bin_width`` since the Unix epoch and
    cover the first to the last timestamp, empty bins included.

    Raises:
        MissingTimestamps: If any stored version lacks a timestamp.
    """
    if bin_width <= timedelta(0):
        raise ValueError("bin width must be positive")
    timestamps = [_timestamp(repo, v) for v in repo.versions]
    if not timestamps:
        return MetricSeries("versions", XAxis.TIME, TOTAL, ())
    counts = Counter(_floor(t, bin_width) for t in timestamps)
    first, last = _floor(min(timestamps), bin_width), _floor(max(timestamps), bin_width)
    points = []
    current = first
    while current <= last:
        points.append((current, counts.get(current, 0)))
        current += bin_width
    return MetricSeries("versions", XAxis.TIME, TOTAL, tuple(points))


def entity_change_matrix(
    repo: VersionRepository,
    module: str | Iri,
    kinds: Iterable[ChangeKind] | None = None,
    include_entailed: bool = False,
) -> ChangeMatrix:
    """Per-entity change dots of one module.

    Raises:
        MissingChangeRecords: If change detection has not been run.
        UnknownModule: If no stored version contains the module.
    """
    schema = repo.schema
    module_iri = module if isinstance(module, Iri) else schema.entity_iri(module)
    records = _selected_records(repo, kinds, include_entailed)

    rows: dict[Iri, int] = {}
    found = False
    for _, graph in repo.iter_versions():
        modules = module_entities(graph, schema)
        if module_iri not in modules:
            continue
        found = True
        entities = typed_entities(graph, schema) - modules
        members = members_of(containment_graph(graph, schema), module_iri) & entities
        for entity in sorted(members, key=lambda iri: iri.value):
            rows.setdefault(entity, len(rows))
    if not found:
        raise UnknownModule(f"module {schema.local_name(module_iri)} is in no stored version")

    cells: Counter = Counter()
    for record, modules in attribute_records(records, repo.history(), schema):
        if module_iri in modules and record.entity in rows:
            cells[(rows[record.entity], record.to_version)] += 1
    return ChangeMatrix(
        module_iri,
        schema.local_name(module_iri),
        tuple(rows),
        tuple((row, version, n) for (row, version), n in sorted(cells.items())),
        tuple(repo.versions),
    )


def release_versions(repo: VersionRepository) -> list[tuple[int, str]]:
    """(version, release label) of every release version."""
    return [(m.version, m.release) for m in repo.metas if m.release]


def release_concentration(
    repo: VersionRepository,
    radius: int = 3,
    kinds: Iterable[ChangeKind] | None = None,
    include_entailed: bool = False,
) -> ReleaseConcentration:
    """Compare change activity near releases with activity elsewhere.

    A version is inside a release window when its number is within
    ``radius`` of a release version. Every stored version after the first
    contributes its change count (possibly zero) to one side.
    """
    if radius < 0:
        raise ValueError("radius must not be negative")
    records = _selected_records(repo, kinds, include_entailed)
    per_version = Counter(r.to_version for r in records)
    releases = [v for v, _ in release_versions(repo)]
    inside, outside = [], []
    for version in repo.versions[1:]:
        side = inside if any(abs(version - r) <= radius for r in releases) else outside
        side.append(per_version.get(version, 0))

    def mean(values: list[int]) -> float:
        return sum(values) / len(values) if values else 0.0

    result = ReleaseConcentration(radius, len(inside), len(outside), mean(inside), mean(outside))
    logger.info("Release concentration: %s", result.to_dict())
    return result
