"""Comparison models: the labeled union of two graph versions."""

from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum

from .errors import BaseMismatch, ParseError
from .graph import Graph, Statement
from .ntriples import format_statement, is_skippable, parse_statement


class VersionLabel(Enum):
    """Where a statement of a comparison model is present."""

    COMMON = "="
    ONLY_BASE = "-"
    ONLY_TARGET = "+"


@dataclass(frozen=True)
class ComparisonModel:
    """Statements of two versions, each labeled Common, OnlyBase or OnlyTarget.

    A partial model omits the Common statements; the repository stores its
    deltas this way.
    """

    base_version: int | None
    target_version: int | None
    common: frozenset[Statement]
    only_base: frozenset[Statement]
    only_target: frozenset[Statement]

    def __post_init__(self) -> None:
        if (
            self.common & self.only_base
            or self.common & self.only_target
            or self.only_base & self.only_target
        ):
            raise ValueError("a statement carries more than one label")

    def __len__(self) -> int:
        return len(self.common) + len(self.only_base) + len(self.only_target)

    def entries(self) -> Iterator[tuple[Statement, VersionLabel]]:
        for s in self.common:
            yield s, VersionLabel.COMMON
        for s in self.only_base:
            yield s, VersionLabel.ONLY_BASE
        for s in self.only_target:
            yield s, VersionLabel.ONLY_TARGET

    def statements(self, label: VersionLabel) -> frozenset[Statement]:
        if label is VersionLabel.COMMON:
            return self.common
        if label is VersionLabel.ONLY_BASE:
            return self.only_base
        return self.only_target

    def label_of(self, statement: Statement) -> VersionLabel | None:
        for label in VersionLabel:
            if statement in self.statements(label):
                return label
        return None

    @property
    def is_identity(self) -> bool:
        """True when both versions hold the same statements."""
        return not self.only_base and not self.only_target

    def without_common(self) -> "ComparisonModel":
        """Partial model carrying only the changed statements."""
        return ComparisonModel(
            self.base_version, self.target_version, frozenset(), self.only_base, self.only_target
        )

    def swapped(self) -> "ComparisonModel":
        """The comparison in the opposite direction."""
        return ComparisonModel(
            self.target_version, self.base_version, self.common, self.only_target, self.only_base
        )


def compare(
    base: Graph,
    target: Graph,
    base_version: int | None = None,
    target_version: int | None = None,
) -> ComparisonModel:
    """Compute the comparison model of two graphs.

    Statement identity is given by the stable IRIs, so this is pure set
    algebra: Common = base ∩ target, OnlyBase = base \\ target and
    OnlyTarget = target \\ base.
    """
    b, t = base.statements, target.statements
    return ComparisonModel(base_version, target_version, b & t, b - t, t - b)


def apply_delta(base: Graph, cm: ComparisonModel, partial: bool = False) -> Graph:
    """Reconstruct the target graph of ``cm`` from its base graph.

    Args:
        base: The graph the comparison was computed against.
        cm: The comparison model.
        partial: Accept a model without Common statements. The precondition
            then becomes OnlyBase ⊆ base and OnlyTarget ∩ base = ∅.

    Raises:
        BaseMismatch: If ``base`` is not the comparison's base.
    """
    statements = base.statements
    if partial:
        if not cm.only_base <= statements or cm.only_target & statements:
            raise BaseMismatch("delta does not apply to this base graph")
    elif cm.common | cm.only_base != statements:
        raise BaseMismatch(
            f"comparison base ({len(cm.common) + len(cm.only_base)} statements) "
            f"differs from the given graph ({len(statements)} statements)"
        )
    return Graph((statements - cm.only_base) | cm.only_target)


def export_comparison(cm: ComparisonModel) -> str:
    """Serialize a comparison model.

    Lines are the canonical statement lines prefixed by ``= ``, ``- `` or
    ``+ ``, grouped in that label order and sorted within each group. Version
    numbers are not part of the document; an empty model exports as "".
    """
    out = []
    for label in VersionLabel:
        for line in sorted(format_statement(s) for s in cm.statements(label)):
            out.append(f"{label.value} {line}\n")
    return "".join(out)


def parse_comparison(
    text: str,
    source: str | None = None,
    base_version: int | None = None,
    target_version: int | None = None,
) -> ComparisonModel:
    """Parse the output of export_comparison.

    The document carries no version numbers; pass them when known.

    Raises:
        ParseError: On a malformed line or a statement with two labels.
    """
    labeled: dict[VersionLabel, set[Statement]] = {label: set() for label in VersionLabel}
    seen: dict[Statement, VersionLabel] = {}
    prefixes = {label.value: label for label in VersionLabel}

    for number, line in enumerate(text.split("\n"), start=1):
        if is_skippable(line):
            continue
        label = prefixes.get(line[:1])
        if label is None or line[1:2] != " ":
            raise ParseError(number, "expected '= ', '- ' or '+ ' prefix", source)
        statement = parse_statement(line[2:], number, source)
        previous = seen.get(statement)
        if previous is not None and previous is not label:
            raise ParseError(number, "statement carries two different labels", source)
        seen[statement] = label
        labeled[label].add(statement)

    return ComparisonModel(
        base_version,
        target_version,
        frozenset(labeled[VersionLabel.COMMON]),
        frozenset(labeled[VersionLabel.ONLY_BASE]),
        frozenset(labeled[VersionLabel.ONLY_TARGET]),
    )
