"""Process schema: entity types, text properties and relations of a process model."""

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidConfig, InvalidSchema
from .graph import Iri

DEFAULT_NAMESPACE = "urn:process-schema:"
DEFAULT_BASE_NAMESPACE = "urn:process:"
TYPE_PROPERTY = "type"

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")


def load_config(config_path: Path) -> dict:
    """Load a YAML mapping from a file.

    Args:
        config_path: Path to the YAML file.

    Returns:
        Dictionary of configuration values.

    Raises:
        InvalidConfig: If the file is missing, not YAML, or not a mapping.
    """
    import yaml

    try:
        with open(config_path) as f:
            data = yaml.safe_load(f)
    except OSError as err:
        raise InvalidConfig(f"cannot read {config_path}: {err.strerror}") from err
    except yaml.YAMLError as err:
        raise InvalidConfig(f"{config_path}: invalid YAML: {err}") from err
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InvalidConfig(f"{config_path}: expected a mapping at top level")
    return data


@dataclass(frozen=True)
class ProcessSchema:
    """Vocabulary used to convert process descriptions into graphs.

    Attributes:
        entity_types: Known entity type names (e.g. Activity, Role).
        containment_relation: Relation name linking a module to its entities.
        text_properties: Property names stored as literal values.
        relations: Relation names stored as IRI-valued statements.
        module_type: Entity type of process modules.
        namespace: IRI prefix of the schema vocabulary (predicates).
        base_namespace: IRI prefix of entities and entity types.
    """

    entity_types: frozenset[str] = frozenset(
        {"ProcessModule", "Activity", "Product", "Role", "TextModule"}
    )
    containment_relation: str = "contains"
    text_properties: frozenset[str] = frozenset({"name", "description"})
    relations: frozenset[str] = frozenset({"contains", "produces", "responsible", "uses"})
    module_type: str = "ProcessModule"
    namespace: str = DEFAULT_NAMESPACE
    base_namespace: str = DEFAULT_BASE_NAMESPACE
    _predicates: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "entity_types", frozenset(self.entity_types))
        object.__setattr__(self, "text_properties", frozenset(self.text_properties))
        object.__setattr__(self, "relations", frozenset(self.relations))

        overlap = self.text_properties & self.relations
        if overlap:
            raise InvalidSchema(
                f"names used both as text property and relation: {', '.join(sorted(overlap))}"
            )
        if self.containment_relation not in self.relations:
            raise InvalidSchema(
                f"containment relation {self.containment_relation!r} is not a declared relation"
            )
        if TYPE_PROPERTY in self.text_properties | self.relations:
            raise InvalidSchema(f"{TYPE_PROPERTY!r} is reserved for entity types")
        for name in self.text_properties | self.relations | self.entity_types:
            if not _NAME.match(name):
                raise InvalidSchema(f"invalid schema name: {name!r}")
        try:
            Iri(self.namespace)
            Iri(self.base_namespace)
        except ValueError as err:
            raise InvalidSchema(str(err)) from err

        predicates = {Iri(self.namespace + n): n for n in self.text_properties | self.relations}
        object.__setattr__(self, "_predicates", predicates)

    @property
    def type_predicate(self) -> Iri:
        return Iri(self.namespace + TYPE_PROPERTY)

    @property
    def containment_predicate(self) -> Iri:
        return Iri(self.namespace + self.containment_relation)

    def predicate(self, name: str) -> Iri:
        """IRI of a text property or relation."""
        return Iri(self.namespace + name)

    def entity_iri(self, entity_id: str) -> Iri:
        return Iri(self.base_namespace + entity_id)

    def type_iri(self, type_name: str) -> Iri:
        return Iri(f"{self.base_namespace}type/{type_name}")

    @property
    def module_type_iri(self) -> Iri:
        return self.type_iri(self.module_type)

    def local_name(self, iri: Iri) -> str:
        """Entity id of an entity IRI (the IRI itself if outside the base namespace)."""
        if iri.value.startswith(self.base_namespace):
            return iri.value[len(self.base_namespace) :]
        return iri.value

    def type_name(self, iri: Iri) -> str | None:
        prefix = f"{self.base_namespace}type/"
        if iri.value.startswith(prefix):
            return iri.value[len(prefix) :]
        return None

    def property_name(self, predicate: Iri) -> str | None:
        """Schema name of a text-property or relation predicate, else None."""
        return self._predicates.get(predicate)

    def is_text_predicate(self, predicate: Iri) -> bool:
        return self._predicates.get(predicate) in self.text_properties

    def is_relation_predicate(self, predicate: Iri) -> bool:
        return self._predicates.get(predicate) in self.relations

    def to_mapping(self) -> dict:
        """Plain mapping suitable for YAML (inverse of from_mapping)."""
        return {
            "entity_types": sorted(self.entity_types),
            "module_type": self.module_type,
            "containment_relation": self.containment_relation,
            "text_properties": sorted(self.text_properties),
            "relations": sorted(self.relations),
            "namespace": self.namespace,
            "base_namespace": self.base_namespace,
        }

    @classmethod
    def from_mapping(cls, data: dict) -> "ProcessSchema":
        """Build a schema from a mapping; absent keys keep their defaults."""
        known = {
            "entity_types",
            "module_type",
            "containment_relation",
            "text_properties",
            "relations",
            "namespace",
            "base_namespace",
        }
        unknown = set(data) - known
        if unknown:
            raise InvalidSchema(f"unknown schema keys: {', '.join(sorted(unknown))}")
        kwargs = {}
        for key in ("entity_types", "text_properties", "relations"):
            if key in data:
                value = data[key]
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise InvalidSchema(f"{key} must be a list of names")
                kwargs[key] = frozenset(value)
        for key in ("module_type", "containment_relation", "namespace", "base_namespace"):
            if key in data:
                if not isinstance(data[key], str):
                    raise InvalidSchema(f"{key} must be a string")
                kwargs[key] = data[key]
        return cls(**kwargs)

    @classmethod
    def load(cls, path: Path) -> "ProcessSchema":
        """Load a schema from a YAML file."""
        try:
            return cls.from_mapping(load_config(path))
        except InvalidConfig as err:
            raise InvalidSchema(str(err)) from err

    def save(self, path: Path) -> None:
        import yaml

        with open(path, "w") as f:
            yaml.safe_dump(self.to_mapping(), f, sort_keys=True)
