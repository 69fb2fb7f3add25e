"""Embedded Datalog engine."""

from .core import (
    Atom,
    ArityError,
    DatalogError,
    EvaluationTimeout,
    FactDB,
    Relation,
    ResourceLimitError,
    Rule,
    StratificationError,
    Var,
    add_fact,
    evaluate,
    neq,
    query,
    sort_key,
    stratify,
)
from .parse import DatalogSyntaxError, parse_atom, parse_program, parse_query, parse_rule, parse_rules

__all__ = [
    "Atom",
    "ArityError",
    "DatalogError",
    "DatalogSyntaxError",
    "EvaluationTimeout",
    "FactDB",
    "Relation",
    "ResourceLimitError",
    "Rule",
    "StratificationError",
    "Var",
    "add_fact",
    "evaluate",
    "neq",
    "parse_atom",
    "parse_program",
    "parse_query",
    "parse_rule",
    "parse_rules",
    "query",
    "sort_key",
    "stratify",
]
