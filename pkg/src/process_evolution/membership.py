"""Module membership derived from containment statements."""

from collections import defaultdict
from collections.abc import Iterable, Iterator
from typing import TYPE_CHECKING

import networkx as nx

from .graph import Graph, Iri
from .schema import ProcessSchema

if TYPE_CHECKING:
    from .changes import ChangeRecord


def module_entities(graph: Graph, schema: ProcessSchema) -> set[Iri]:
    """Entities typed as modules plus every subject of a containment statement."""
    type_predicate = schema.type_predicate
    module_type = schema.module_type_iri
    modules = {
        s.subject for s in graph.by_object.get(module_type, ()) if s.predicate == type_predicate
    }
    modules.update(s.subject for s in graph.by_predicate.get(schema.containment_predicate, ()))
    return modules


def typed_entities(graph: Graph, schema: ProcessSchema) -> set[Iri]:
    """Distinct subjects of type statements."""
    return {s.subject for s in graph.by_predicate.get(schema.type_predicate, ())}


def containment_graph(graph: Graph, schema: ProcessSchema) -> nx.DiGraph:
    """Directed module -> entity graph of one version.

    Every module is a node even when it contains nothing. Targets of
    containment statements are nodes even when dangling.
    """
    containment = nx.DiGraph()
    containment.add_nodes_from(module_entities(graph, schema), module=True)
    for s in graph.by_predicate.get(schema.containment_predicate, ()):
        if isinstance(s.object, Iri):
            containment.add_edge(s.subject, s.object)
    return containment


def modules_of(containment: nx.DiGraph, entity: Iri) -> list[Iri]:
    """Modules directly containing ``entity``, sorted by IRI."""
    if entity not in containment:
        return []
    return sorted(containment.predecessors(entity), key=lambda iri: iri.value)


def members_of(containment: nx.DiGraph, module: Iri) -> set[Iri]:
    if module not in containment:
        return set()
    return set(containment.successors(module))


def attributed_modules(
    entity: Iri, before: nx.DiGraph | None, after: nx.DiGraph, present_after: bool
) -> list[Iri]:
    """Modules a change to ``entity`` is attributed to.

    Membership is taken at the later version. An entity absent from the
    later version (it was deleted) keeps the modules it had at the earlier one.
    """
    if present_after or before is None:
        return modules_of(after, entity)
    return modules_of(before, entity)


def attribute_records(
    records: Iterable["ChangeRecord"],
    history: Iterable[tuple[int, Graph]],
    schema: ProcessSchema,
) -> Iterator[tuple["ChangeRecord", list[Iri]]]:
    """Pair each change record with the modules it is attributed to.

    ``history`` yields (version, graph) in ascending order, as a repository
    walk does. Containment graphs are kept only while a later record still
    needs them. Records come out grouped by target version.
    """
    by_target: dict[int, list] = defaultdict(list)
    last_use: dict[int, int] = {}
    for r in records:
        by_target[r.to_version].append(r)
        for v in (r.from_version, r.to_version):
            last_use[v] = max(last_use.get(v, 0), r.to_version)
    if not by_target:
        return

    cache: dict[int, tuple[Graph, nx.DiGraph]] = {}
    final = max(by_target)
    for version, graph in history:
        if version in last_use:
            cache[version] = (graph, containment_graph(graph, schema))
        if version in by_target:
            after_graph, after = cache[version]
            for r in by_target[version]:
                before = cache[r.from_version][1] if r.from_version in cache else None
                present = r.entity in after_graph.by_subject
                yield r, attributed_modules(r.entity, before, after, present)
        for stale in [v for v, last in last_use.items() if last <= version and v in cache]:
            del cache[stale]
        if version >= final:
            break
