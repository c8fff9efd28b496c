"""Conjunctive queries with filters over graphs and comparison models."""

from .engine import PlanStep, evaluate, explain, plan_query
from .model import EqualsFilter, Query, RegexFilter, Solution, TriplePattern, Variable
from .parser import parse_query
from .regex import compile_regex

__all__ = [
    "Variable",
    "TriplePattern",
    "EqualsFilter",
    "RegexFilter",
    "Query",
    "Solution",
    "parse_query",
    "compile_regex",
    "evaluate",
    "explain",
    "plan_query",
    "PlanStep",
]
