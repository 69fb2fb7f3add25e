"""Deciding a property over derived facts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from ..datalog import FactDB, evaluate, query, sort_key
from .compile import CompiledSignature, compile_signature
from .graph import PropertySignature

SATISFIED = "satisfied"
VIOLATION = "violation"
NOT_APPLICABLE = "not-applicable"
ERROR = "error"
OUTCOMES = (SATISFIED, VIOLATION, NOT_APPLICABLE, ERROR)


@dataclass
class Verdict:
    property: str
    outcome: str
    witness: dict[str, int] = field(default_factory=dict)
    witnesses: list[dict[str, int]] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    log: list[dict] = field(default_factory=list)

    @property
    def witness_labels(self) -> list[int]:
        return list(self.witness.values())


def find_embeddings(
    facts: FactDB,
    sig: PropertySignature,
    compiled: Optional[CompiledSignature] = None,
    deadline: Optional[float] = None,
) -> list[tuple[int, dict[str, int]]]:
    """All (disjunct index, binding) pairs, least first."""
    compiled = compiled or compile_signature(sig)
    db = evaluate(facts, compiled.rules, deadline=deadline)
    found: list[tuple[int, dict[str, int]]] = []
    for i, head in enumerate(compiled.heads):
        for b in query(db, [head]):
            found.append((i, {v: int(b[v]) for v in (a.name for a in head.args)}))
    found.sort(key=lambda item: (tuple(sort_key(str(x)) for x in item[1].values()), item[0]))
    return found


def check_property(
    facts: FactDB,
    sig: PropertySignature,
    compiled: Optional[CompiledSignature] = None,
    deadline: Optional[float] = None,
    all_witnesses: bool = False,
) -> Verdict:
    """Presence mode: satisfied iff the signature embeds.  Absence mode: violation iff it does."""
    start = time.perf_counter()
    found = find_embeddings(facts, sig, compiled, deadline)
    if sig.mode == "presence":
        outcome = SATISFIED if found else VIOLATION
    else:
        outcome = VIOLATION if found else SATISFIED
    v = Verdict(sig.id, outcome)
    if found:
        v.witness = dict(found[0][1])
        if all_witnesses:
            v.witnesses = [dict(b) for _, b in found]
    v.stats["embeddings"] = len(found)
    v.stats["check_seconds"] = time.perf_counter() - start
    return v
