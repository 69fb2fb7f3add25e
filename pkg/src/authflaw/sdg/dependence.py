"""flowTo / followBy derivation over SDG base facts."""

from __future__ import annotations

from typing import Optional

from ..datalog import FactDB, evaluate, parse_rules
from .graph import SDG

# The six rules, unchanged: flowTo over assign/alloc/alias, followBy over follow.
DEPENDENCE_RULES_TEXT = """
flowTo(X, Y) :- alloc(_, Y, X).
flowTo(X, Y) :- assign(_, Y, X).
flowTo(X, Z) :- assign(_, Y, X), flowTo(Y, Z).
flowTo(X, Z) :- alias(Y, Z), flowTo(X, Y).
followBy(X, Y) :- follow(X, Y).
followBy(X, Z) :- followBy(Y, Z), follow(X, Y).
"""

DEPENDENCE_RULES = parse_rules(DEPENDENCE_RULES_TEXT)

BASE_ARITIES = {
    "label": 1,
    "assign": 3,
    "alloc": 3,
    "alias": 2,
    "follow": 2,
    "branch": 4,
    "load": 3,
    "store": 4,
    "call": 2,
    "arg": 3,
    "resolved": 2,
}


def base_db(sdg: SDG) -> FactDB:
    db = FactDB()
    for pred, arity in BASE_ARITIES.items():
        db.declare(pred, arity)
    for pred, args in sdg.facts:
        db.add_tuple(pred, args)
    return db


def derive_dependence_facts(sdg: SDG, deadline: Optional[float] = None) -> FactDB:
    return evaluate(base_db(sdg), DEPENDENCE_RULES, deadline=deadline)
