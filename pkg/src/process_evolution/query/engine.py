"""Query evaluation over graphs and comparison models.

Patterns are reordered greedily so that the pattern with the most bound
positions runs first, then joined with an index-backed nested loop. Filters
are checked as soon as their variable is bound.
"""

import logging
from collections.abc import Iterator
from dataclasses import dataclass

from ..comparison import ComparisonModel
from ..errors import LabelConstraintOnPlainGraph
from ..graph import Graph, Statement, Term
from .model import Filter, Query, Solution, TriplePattern, Variable

logger = logging.getLogger(__name__)

Dataset = Graph | ComparisonModel
Binding = dict[Variable, Term]


@dataclass(frozen=True)
class PlanStep:
    """One pattern of a query plan with the filters checked after it."""

    pattern: TriplePattern
    bound: tuple[str, ...]
    estimate: int
    filters: tuple[Filter, ...]

    def __str__(self) -> str:
        bound = ",".join(self.bound) if self.bound else "none"
        return f"{self.pattern}  [bound: {bound}; candidates <= {self.estimate}]"


class _Index:
    """Statement lookup over a graph or the union of a comparison model."""

    def __init__(self, dataset: Dataset):
        if isinstance(dataset, ComparisonModel):
            self.graph = Graph(dataset.common | dataset.only_base | dataset.only_target)
            self.comparison: ComparisonModel | None = dataset
        else:
            self.graph = dataset
            self.comparison = None

    def estimate(self, pattern: TriplePattern) -> int:
        """Upper bound on candidates using the concrete positions only."""
        sizes = [len(self.graph)]
        indexes = (self.graph.by_subject, self.graph.by_predicate, self.graph.by_object)
        for term, index in zip(pattern.positions(), indexes):
            if not isinstance(term, Variable):
                sizes.append(len(index.get(term, ())))
        return min(sizes)

    def candidates(self, pattern: TriplePattern, binding: Binding) -> frozenset[Statement]:
        best: frozenset[Statement] | None = None
        indexes = (self.graph.by_subject, self.graph.by_predicate, self.graph.by_object)
        for term, index in zip(pattern.positions(), indexes):
            value = binding.get(term) if isinstance(term, Variable) else term
            if value is None:
                continue
            found = index.get(value, frozenset())
            if best is None or len(found) < len(best):
                best = found
        return self.graph.statements if best is None else best

    def has_label(self, statement: Statement, pattern: TriplePattern) -> bool:
        if pattern.label is None or self.comparison is None:
            return True
        return statement in self.comparison.statements(pattern.label)


def _bound_positions(pattern: TriplePattern, bound_vars: set[Variable]) -> tuple[str, ...]:
    names = ("s", "p", "o")
    return tuple(
        name
        for name, term in zip(names, pattern.positions())
        if not isinstance(term, Variable) or term in bound_vars
    )


def plan_query(dataset: Dataset, query: Query) -> list[PlanStep]:
    """Order the query's patterns by ascending estimated selectivity.

    Raises:
        LabelConstraintOnPlainGraph: If a labeled pattern targets a plain graph.
    """
    if isinstance(dataset, Graph) and any(p.label is not None for p in query.patterns):
        raise LabelConstraintOnPlainGraph("label constraints need a comparison model")
    return _plan(_Index(dataset), query)


def _plan(index: _Index, query: Query) -> list[PlanStep]:
    remaining = list(enumerate(query.patterns))
    pending_filters = list(query.filters)
    bound_vars: set[Variable] = set()
    steps = []
    while remaining:

        def score(item: tuple[int, TriplePattern]) -> tuple[int, int, int]:
            position, pattern = item
            bound = len(_bound_positions(pattern, bound_vars))
            return (-bound, index.estimate(pattern), position)

        chosen = min(remaining, key=score)
        remaining.remove(chosen)
        pattern = chosen[1]
        bound = _bound_positions(pattern, bound_vars)
        bound_vars.update(pattern.variables())
        ready = tuple(f for f in pending_filters if f.variable in bound_vars)
        pending_filters = [f for f in pending_filters if f not in ready]
        steps.append(PlanStep(pattern, bound, index.estimate(pattern), ready))
    return steps


def _match(pattern: TriplePattern, statement: Statement, binding: Binding) -> Binding | None:
    extended = binding
    values = (statement.subject, statement.predicate, statement.object)
    for term, value in zip(pattern.positions(), values):
        if isinstance(term, Variable):
            current = extended.get(term)
            if current is None:
                if extended is binding:
                    extended = dict(binding)
                extended[term] = value
            elif current != value:
                return None
        elif term != value:
            return None
    return extended


def _solve(
    index: _Index, steps: list[PlanStep], depth: int, binding: Binding
) -> Iterator[Binding]:
    if depth == len(steps):
        yield binding
        return
    step = steps[depth]
    for statement in index.candidates(step.pattern, binding):
        if not index.has_label(statement, step.pattern):
            continue
        extended = _match(step.pattern, statement, binding)
        if extended is None:
            continue
        if all(f.holds(extended) for f in step.filters):
            yield from _solve(index, steps, depth + 1, extended)


def evaluate(dataset: Dataset, query: Query) -> list[Solution]:
    """Evaluate a query.

    Args:
        dataset: A graph, or a comparison model for label-constrained patterns.
        query: The parsed query.

    Returns:
        Solutions projected to the selected variables, sorted by their
        serialized terms; duplicates are removed when the query is DISTINCT.

    Raises:
        LabelConstraintOnPlainGraph: If a labeled pattern targets a plain graph.
    """
    if isinstance(dataset, Graph) and any(p.label is not None for p in query.patterns):
        raise LabelConstraintOnPlainGraph("label constraints need a comparison model")
    index = _Index(dataset)
    steps = _plan(index, query)
    for number, step in enumerate(steps, start=1):
        logger.debug("plan %d: %s", number, step)

    solutions = []
    for binding in _solve(index, steps, 0, {}):
        solutions.append(Solution(tuple((v, binding[v]) for v in query.select)))
    if query.distinct:
        solutions = list(dict.fromkeys(solutions))
    solutions.sort(key=Solution.sort_key)
    return solutions


def explain(dataset: Dataset, query: Query) -> list[str]:
    """Human-readable plan lines in execution order."""
    lines = []
    for number, step in enumerate(plan_query(dataset, query), start=1):
        lines.append(f"{number}. {step}")
        lines.extend(f"   {f}" for f in step.filters)
    return lines
