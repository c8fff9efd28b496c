"""Synthetic version-history corpora with ground-truth change records.

The generator evolves an in-memory process model version by version and
writes every version in the corpus XML dialect. Randomness comes from
xorshift64* seeded through splitmix64, so a seed gives the same corpus bytes
on every platform.

Ground truth is the net model-level difference between consecutive
well-formed versions; pairs that bridge a malformed version carry the
combined changes of all versions in between.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

from .changes import DEFAULT_KINDS, ChangeKind, ChangeRecord, records_to_csv
from .errors import InvalidConfig, InvalidSchema
from .graph import Literal
from .ingest import METADATA_FILE, EntityRecord, render_process_xml
from .repository import escape_tsv_field, format_timestamp, parse_timestamp
from .schema import ProcessSchema, load_config

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GROUND_TRUTH_FILE = "groundtruth.csv"
WORDS = (
    "plan",
    "review",
    "design",
    "test",
    "release",
    "archive",
    "approve",
    "measure",
    "Prüfung",
    "Änderung",
    "quality",
    "project",
    "system",
    "contract",
    "risk",
    "training",
)


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* (shifts 12, 25, 27; multiplier 0x2545F4914F6CDD1D).

    The 64-bit state is the first splitmix64 output of the seed, replaced by
    1 if it is zero.
    """

    MULTIPLIER = 0x2545F4914F6CDD1D

    def __init__(self, seed: int):
        _, state = splitmix64(seed & MASK64)
        self.state = state or 1

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * self.MULTIPLIER) & MASK64

    def below(self, n: int) -> int:
        """Integer in [0, n) as ``next_u64() % n``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def between(self, low: int, high: int) -> int:
        """Integer in [low, high]."""
        return low + self.below(high - low + 1)

    def unit(self) -> float:
        """Float in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, items):
        return items[self.below(len(items))]

    def weighted(self, weights: list[tuple[object, float]]):
        total = sum(w for _, w in weights)
        target = self.unit() * total
        for item, weight in weights:
            if weight <= 0:
                continue
            if target < weight:
                return item
            target -= weight
        return next(item for item, weight in reversed(weights) if weight > 0)


@dataclass(frozen=True)
class Release:
    version: int
    intensity: int
    label: str


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of a synthetic corpus.

    Attributes:
        seed: Random seed.
        version_count: Number of versions (files) to write.
        module_count: Number of process modules.
        initial_entity_count: Non-module entities in version 1.
        final_entity_count: Non-module entities in the last version.
        operations_per_version: Mean number of random edits per version.
        releases: Release versions with their burst intensity.
        burst_radius: Versions within this distance of a release are in its burst.
        change_kind_weights: Relative frequency of each edit kind.
        malformed_versions: Versions written as ill-formed XML.
        start: Timestamp of version 1.
        min_gap_hours, max_gap_hours: Gap range between versions.
        burst_min_gap_hours, burst_max_gap_hours: Gap range inside bursts.
    """

    seed: int = 1
    version_count: int = 10
    module_count: int = 3
    initial_entity_count: int = 20
    final_entity_count: int | None = None
    operations_per_version: int = 2
    releases: tuple[Release, ...] = ()
    burst_radius: int = 3
    change_kind_weights: dict[ChangeKind, float] = field(
        default_factory=lambda: {
            ChangeKind.TEXT_PROPERTY_CHANGED: 6.0,
            ChangeKind.ENTITY_ADDED: 1.0,
            ChangeKind.ENTITY_DELETED: 1.0,
            ChangeKind.RELATION_ADDED: 1.0,
            ChangeKind.RELATION_DELETED: 1.0,
        }
    )
    malformed_versions: frozenset[int] = frozenset()
    start: datetime = datetime(2005, 1, 3, 9, 0, tzinfo=timezone.utc)
    min_gap_hours: float = 12.0
    max_gap_hours: float = 72.0
    burst_min_gap_hours: float = 0.25
    burst_max_gap_hours: float = 1.5

    def __post_init__(self) -> None:
        if self.version_count < 1:
            raise InvalidConfig("versions must be at least 1")
        if self.initial_entity_count < 0 or self.target_final < 0:
            raise InvalidConfig("entity counts must not be negative")
        if self.module_count < 1:
            raise InvalidConfig("modules must be at least 1")
        if self.operations_per_version < 0 or self.burst_radius < 0:
            raise InvalidConfig("operations_per_version and burst_radius must not be negative")
        weights = self.change_kind_weights.values()
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise InvalidConfig("change kind weights must be non-negative with one positive")
        for v in self.malformed_versions:
            if not 1 <= v <= self.version_count:
                raise InvalidConfig(f"malformed version {v} is out of range")
        for r in self.releases:
            if not 1 <= r.version <= self.version_count or r.intensity < 1:
                raise InvalidConfig(f"invalid release {r.label!r} at version {r.version}")
        if not 0 <= self.min_gap_hours <= self.max_gap_hours:
            raise InvalidConfig("gap range must satisfy 0 <= min_gap_hours <= max_gap_hours")
        if not 0 <= self.burst_min_gap_hours <= self.burst_max_gap_hours:
            raise InvalidConfig("burst gap range is invalid")

    @property
    def target_final(self) -> int:
        if self.final_entity_count is None:
            return self.initial_entity_count
        return self.final_entity_count

    @classmethod
    def from_mapping(cls, data: dict) -> "GeneratorConfig":
        """Build a config from a parsed YAML mapping (see README for the keys)."""
        keys = {
            "seed": "seed",
            "versions": "version_count",
            "modules": "module_count",
            "initial_entities": "initial_entity_count",
            "final_entities": "final_entity_count",
            "operations_per_version": "operations_per_version",
            "burst_radius": "burst_radius",
        }
        known = set(keys) | {"releases", "change_kind_weights", "malformed_versions", "timestamps"}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"unknown generator keys: {', '.join(sorted(unknown))}")
        kwargs: dict = {}
        for key, name in keys.items():
            if key in data:
                value = data[key]
                if not isinstance(value, int) or isinstance(value, bool):
                    raise InvalidConfig(f"{key} must be an integer")
                kwargs[name] = value
        releases = data.get("releases") or []
        if not isinstance(releases, list):
            raise InvalidConfig("releases must be a list")
        kwargs["releases"] = tuple(_release(item, i) for i, item in enumerate(releases))
        if "change_kind_weights" in data:
            kwargs["change_kind_weights"] = _weights(data["change_kind_weights"])
        malformed = data.get("malformed_versions") or []
        if not isinstance(malformed, list) or not all(isinstance(v, int) for v in malformed):
            raise InvalidConfig("malformed_versions must be a list of version numbers")
        kwargs["malformed_versions"] = frozenset(malformed)
        kwargs.update(_timestamp_model(data.get("timestamps") or {}))
        return cls(**kwargs)

    @classmethod
    def load(cls, path: Path) -> "GeneratorConfig":
        return cls.from_mapping(load_config(path))


def _release(item, index: int) -> Release:
    if not isinstance(item, dict) or "version" not in item:
        raise InvalidConfig(f"release {index + 1} needs a version")
    try:
        return Release(
            int(item["version"]),
            int(item.get("intensity", 5)),
            str(item.get("label", f"R{index + 1}")),
        )
    except (TypeError, ValueError) as err:
        raise InvalidConfig(f"release {index + 1}: {err}") from err


def _weights(data) -> dict[ChangeKind, float]:
    if not isinstance(data, dict):
        raise InvalidConfig("change_kind_weights must be a mapping")
    weights = {kind: 0.0 for kind in ChangeKind}
    for name, weight in data.items():
        try:
            kind = ChangeKind(name)
        except ValueError as err:
            raise InvalidConfig(f"unknown change kind {name!r}") from err
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise InvalidConfig(f"weight of {name} must be a number")
        weights[kind] = float(weight)
    return weights


def _instant(value) -> datetime:
    if isinstance(value, datetime):
        return value if value.tzinfo else value.replace(tzinfo=timezone.utc)
    if isinstance(value, date):
        return datetime(value.year, value.month, value.day, tzinfo=timezone.utc)
    try:
        return parse_timestamp(str(value))
    except ValueError as err:
        raise InvalidConfig(f"invalid start timestamp {value!r}") from err


def _timestamp_model(data) -> dict:
    if not isinstance(data, dict):
        raise InvalidConfig("timestamps must be a mapping")
    names = {"min_gap_hours", "max_gap_hours", "burst_min_gap_hours", "burst_max_gap_hours"}
    unknown = set(data) - names - {"start"}
    if unknown:
        raise InvalidConfig(f"unknown timestamp keys: {', '.join(sorted(unknown))}")
    out: dict = {}
    if "start" in data:
        out["start"] = _instant(data["start"])
    for name in names & set(data):
        if not isinstance(data[name], (int, float)) or isinstance(data[name], bool):
            raise InvalidConfig(f"{name} must be a number")
        out[name] = float(data[name])
    return out


@dataclass
class EntityState:
    type: str
    module: str | None
    properties: dict[str, str]
    refs: set[tuple[str, str]] = field(default_factory=set)

    def copy(self) -> "EntityState":
        return EntityState(self.type, self.module, dict(self.properties), set(self.refs))


@dataclass(frozen=True)
class VersionInfo:
    version: int
    timestamp: datetime
    author: str
    comment: str
    release: str | None
    malformed: bool


@dataclass
class GeneratedCorpus:
    """A generated corpus and everything it is known to contain.

    Attributes:
        files: File name -> bytes of every version file.
        versions: Metadata of every version (malformed ones included).
        ground_truth: Change records between consecutive well-formed versions.
        entity_counts: Per well-formed version, module id -> entity count.
        change_counts: (module id, version) -> default-kind change record count.
    """

    files: dict[str, bytes]
    versions: list[VersionInfo]
    ground_truth: list[ChangeRecord]
    entity_counts: dict[int, dict[str, int]]
    change_counts: dict[tuple[str, int], int]

    @property
    def releases(self) -> list[tuple[int, str]]:
        return [(v.version, v.release) for v in self.versions if v.release]

    def metadata_tsv(self) -> str:
        lines = ["version\ttimestamp\tauthor\tcomment\trelease"]
        for v in self.versions:
            fields = [
                str(v.version),
                format_timestamp(v.timestamp),
                escape_tsv_field(v.author),
                escape_tsv_field(v.comment),
                escape_tsv_field(v.release or ""),
            ]
            lines.append("\t".join(fields))
        return "\n".join(lines) + "\n"

    def write(self, out_dir: Path) -> None:
        """Write version files, ``versions.tsv`` and ``groundtruth.csv``."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, content in self.files.items():
            (out_dir / name).write_bytes(content)
        (out_dir / METADATA_FILE).write_text(self.metadata_tsv(), encoding="utf-8")
        (out_dir / GROUND_TRUTH_FILE).write_text(
            records_to_csv(self.ground_truth), encoding="utf-8"
        )


class _Model:
    """Mutable process model the generator edits.

    Entity types, text properties and relations are drawn from the schema so
    that every generated statement survives conversion.
    """

    def __init__(self, config: GeneratorConfig, rng: XorShift64Star, schema: ProcessSchema):
        self.config = config
        self.rng = rng
        self.module_type = schema.module_type
        self.containment = schema.containment_relation
        self.entity_types = sorted(schema.entity_types - {schema.module_type})
        self.relations = sorted(schema.relations - {schema.containment_relation})
        self.text_properties = sorted(schema.text_properties, key=_text_property_order)
        if not self.entity_types:
            raise InvalidSchema("the schema declares no entity type besides the module type")
        self.entities: dict[str, EntityState] = {}
        self.next_id = 1
        self.text_counter = 0
        width = len(str(config.module_count))
        self.modules = [f"pm{i:0{width}d}" for i in range(1, config.module_count + 1)]
        for i, module in enumerate(self.modules, start=1):
            label = {self.text_properties[0]: f"Process module {i}"} if self.text_properties else {}
            self.entities[module] = EntityState(self.module_type, None, label)
        for _ in range(config.initial_entity_count):
            self.add_entity()

    def text(self, entity_id: str, prop: str) -> str:
        self.text_counter += 1
        words = " ".join(self.rng.choice(WORDS) for _ in range(1 + self.rng.below(4)))
        return f"{prop} of {entity_id}: {words} ({self.text_counter})"

    def plain_entities(self) -> list[str]:
        return [e for e, state in self.entities.items() if state.type != self.module_type]

    def add_entity(self) -> str:
        entity_id = f"e{self.next_id:05d}"
        self.next_id += 1
        module = self.rng.choice(self.modules)
        state = EntityState(self.rng.choice(self.entity_types), module, {})
        for prop in self.text_properties:
            state.properties[prop] = self.text(entity_id, prop)
        others = self.plain_entities()
        self.entities[entity_id] = state
        self.entities[module].refs.add((self.containment, entity_id))
        if others and self.relations and self.rng.below(2):
            state.refs.add((self.rng.choice(self.relations), self.rng.choice(others)))
        return entity_id

    def delete_entity(self) -> bool:
        candidates = self.plain_entities()
        if not candidates:
            return False
        victim = self.rng.choice(candidates)
        del self.entities[victim]
        for state in self.entities.values():
            state.refs = {(name, target) for name, target in state.refs if target != victim}
        return True

    def change_text(self) -> bool:
        candidates = self.plain_entities()
        if not candidates or not self.text_properties:
            return False
        entity_id = self.rng.choice(candidates)
        prop = self.rng.choice(self.text_properties)
        self.entities[entity_id].properties[prop] = self.text(entity_id, prop)
        return True

    def add_relation(self) -> bool:
        candidates = self.plain_entities()
        if len(candidates) < 2 or not self.relations:
            return False
        source = self.rng.choice(candidates)
        target = self.rng.choice(candidates)
        ref = (self.rng.choice(self.relations), target)
        if source == target or ref in self.entities[source].refs:
            return False
        self.entities[source].refs.add(ref)
        return True

    def delete_relation(self) -> bool:
        refs = [
            (entity_id, ref)
            for entity_id in self.plain_entities()
            for ref in sorted(self.entities[entity_id].refs)
        ]
        if not refs:
            return False
        entity_id, ref = self.rng.choice(refs)
        self.entities[entity_id].refs.discard(ref)
        return True

    def apply(self, kind: ChangeKind) -> bool:
        if kind is ChangeKind.TEXT_PROPERTY_CHANGED:
            return self.change_text()
        if kind is ChangeKind.ENTITY_ADDED:
            self.add_entity()
            return True
        if kind is ChangeKind.ENTITY_DELETED:
            return self.delete_entity()
        if kind is ChangeKind.RELATION_ADDED:
            return self.add_relation()
        return self.delete_relation()

    def snapshot(self) -> dict[str, EntityState]:
        return {entity_id: state.copy() for entity_id, state in self.entities.items()}

    def records(self) -> list[EntityRecord]:
        out = []
        for entity_id in sorted(self.entities):
            state = self.entities[entity_id]
            properties = tuple((p, Literal(v)) for p, v in sorted(state.properties.items()))
            out.append(EntityRecord(entity_id, state.type, properties, tuple(sorted(state.refs))))
        return out


def diff_states(
    before: dict[str, EntityState],
    after: dict[str, EntityState],
    from_version: int,
    to_version: int,
    schema: ProcessSchema,
) -> list[ChangeRecord]:
    """Net change records between two model states."""
    added = set(after) - set(before)
    deleted = set(before) - set(after)
    touched = added | deleted
    records = []
    for ids, kind in ((added, ChangeKind.ENTITY_ADDED), (deleted, ChangeKind.ENTITY_DELETED)):
        for entity_id in ids:
            records.append(
                ChangeRecord(kind, from_version, to_version, schema.entity_iri(entity_id))
            )
    for entity_id in set(before) | set(after):
        old_refs = before[entity_id].refs if entity_id in before else set()
        new_refs = after[entity_id].refs if entity_id in after else set()
        relation_changes = (
            (new_refs - old_refs, ChangeKind.RELATION_ADDED),
            (old_refs - new_refs, ChangeKind.RELATION_DELETED),
        )
        for refs, kind in relation_changes:
            for name, target in refs:
                records.append(
                    ChangeRecord(
                        kind,
                        from_version,
                        to_version,
                        schema.entity_iri(entity_id),
                        schema.predicate(name),
                        schema.entity_iri(target),
                        entailed=entity_id in touched or target in touched,
                    )
                )
        if entity_id in touched:
            continue
        old_props, new_props = before[entity_id].properties, after[entity_id].properties
        for prop in set(old_props) | set(new_props):
            old = {Literal(old_props[prop])} if prop in old_props else set()
            new = {Literal(new_props[prop])} if prop in new_props else set()
            if old != new:
                records.append(
                    ChangeRecord(
                        ChangeKind.TEXT_PROPERTY_CHANGED,
                        from_version,
                        to_version,
                        schema.entity_iri(entity_id),
                        schema.predicate(prop),
                        old_values=frozenset(old),
                        new_values=frozenset(new),
                    )
                )
    records.sort(key=ChangeRecord.sort_key)
    return records


def _module_of(
    entity_id: str, before: dict[str, EntityState], after: dict[str, EntityState]
) -> str | None:
    state = after[entity_id] if entity_id in after else before[entity_id]
    return state.module


def _text_property_order(name: str) -> tuple[bool, str]:
    """Sort key putting ``name`` first, then alphabetical."""
    return (name != "name", name)


def _in_burst(version: int, config: GeneratorConfig) -> Release | None:
    for release in config.releases:
        if abs(version - release.version) <= config.burst_radius:
            return release
    return None


def _gap(rng: XorShift64Star, low_hours: float, high_hours: float) -> timedelta:
    low, high = round(low_hours * 3600), round(high_hours * 3600)
    return timedelta(seconds=rng.between(low, high))


def generate(config: GeneratorConfig, schema: ProcessSchema | None = None) -> GeneratedCorpus:
    """Generate a corpus.

    Version 1 holds ``initial_entity_count`` entities spread over the
    modules. Every later version applies a random number of weighted edits
    (more inside release bursts) and then adds or deletes entities until the
    count matches a linear growth line ending at ``final_entity_count``.
    """
    schema = schema or ProcessSchema()
    rng = XorShift64Star(config.seed)
    model = _Model(config, rng, schema)
    kinds = [(kind, config.change_kind_weights.get(kind, 0.0)) for kind in ChangeKind]
    releases = {r.version: r for r in config.releases}
    width = max(4, len(str(config.version_count)))
    span = config.target_final - config.initial_entity_count

    files: dict[str, bytes] = {}
    versions: list[VersionInfo] = []
    ground_truth: list[ChangeRecord] = []
    entity_counts: dict[int, dict[str, int]] = {}
    change_counts: Counter = Counter()
    previous: tuple[int, dict[str, EntityState]] | None = None
    timestamp = config.start

    for version in range(1, config.version_count + 1):
        burst = _in_burst(version, config)
        if version > 1:
            operations = rng.below(2 * config.operations_per_version + 1)
            if burst is not None:
                operations = operations * burst.intensity + burst.intensity
            for _ in range(operations):
                model.apply(rng.weighted(kinds))
            if config.version_count > 1:
                target = config.initial_entity_count + math.floor(
                    span * (version - 1) / (config.version_count - 1) + 0.5
                )
            else:
                target = config.initial_entity_count
            while len(model.plain_entities()) < target:
                model.add_entity()
            while len(model.plain_entities()) > target:
                model.delete_entity()
            if burst is not None:
                gap = _gap(rng, config.burst_min_gap_hours, config.burst_max_gap_hours)
            else:
                gap = _gap(rng, config.min_gap_hours, config.max_gap_hours)
            timestamp = timestamp + gap

        release = releases.get(version)
        malformed = version in config.malformed_versions
        comment = f"Release {release.label}" if release else f"Edit session {version}"
        author = f"author{1 + rng.below(5)}"
        versions.append(
            VersionInfo(
                version,
                timestamp,
                author,
                comment,
                release.label if release else None,
                malformed,
            )
        )
        document = render_process_xml(model.records()).encode("utf-8")
        if malformed:
            document = document[: len(document) // 2]
        files[f"{version:0{width}d}.xml"] = document
        if malformed:
            continue

        state = model.snapshot()
        counts = Counter(s.module for s in state.values() if s.type != model.module_type)
        entity_counts[version] = {m: counts.get(m, 0) for m in model.modules}
        if previous is not None:
            records = diff_states(previous[1], state, previous[0], version, schema)
            ground_truth.extend(records)
            for r in records:
                if r.kind in DEFAULT_KINDS:
                    module = _module_of(schema.local_name(r.entity), previous[1], state)
                    change_counts[(module or "unassigned", version)] += 1
        previous = (version, state)

    logger.info(
        "Generated %d versions with %d ground-truth records",
        config.version_count,
        len(ground_truth),
    )
    return GeneratedCorpus(files, versions, ground_truth, entity_counts, dict(change_counts))
