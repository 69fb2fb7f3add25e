"""Exhaustive embedding search, used as an oracle for the compiled queries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional

from ..datalog import FactDB
from .graph import SignatureGraph

MAX_SIGNATURE_NODES = 10


class SignatureTooLarge(ValueError):
    pass


@dataclass
class TypedGraph:
    labels: set[str] = field(default_factory=set)
    tags: dict[str, set[str]] = field(default_factory=dict)
    flow: set[tuple[str, str]] = field(default_factory=set)
    follow: set[tuple[str, str]] = field(default_factory=set)
    branches: set[tuple[str, str, str, str]] = field(default_factory=set)

    @classmethod
    def from_facts(cls, db: FactDB) -> "TypedGraph":
        g = cls()
        g.labels = {t[0] for t in db.facts("label")}
        for L, t in db.facts("OAuthTag"):
            g.tags.setdefault(L, set()).add(t)
        g.flow = db.facts("flowTo")
        g.follow = db.facts("followBy")
        g.branches = db.facts("branch")
        return g

    @property
    def branch_nodes(self) -> set[str]:
        return {b[0] for b in self.branches}


def _domain(g: SignatureGraph, tg: TypedGraph, bound: frozenset[str]) -> dict[str, list[str]]:
    branch_vars = {b.node for b in g.branches}
    dom: dict[str, list[str]] = {}
    for n in g.nodes:
        if n.types:
            cands = {L for L, ts in tg.tags.items() if n.types <= ts}
        elif n.var in branch_vars or n.var in bound:
            cands = set(tg.labels) | set(tg.tags) | tg.branch_nodes
        else:
            cands = set(tg.labels)
        if n.var in branch_vars:
            cands &= tg.branch_nodes
        dom[n.var] = sorted(cands, key=lambda x: (len(x), x))
    return dom


def _consistent(g: SignatureGraph, tg: TypedGraph, m: Mapping[str, str]) -> bool:
    """Check every edge whose endpoints are all assigned."""
    for x, y in g.data:
        if x in m and y in m and (m[x], m[y]) not in tg.flow:
            return False
    for x, y in g.control:
        if x in m and y in m and (m[x], m[y]) not in tg.follow:
            return False
    for b in g.branches:
        ends = [b.node, b.cond] + [v for v in (b.true, b.false) if v is not None]
        if all(v in m for v in ends):
            if not any(
                t[0] == m[b.node]
                and t[1] == m[b.cond]
                and (b.true is None or t[2] == m[b.true])
                and (b.false is None or t[3] == m[b.false])
                for t in tg.branches
            ):
                return False
    return True


def _embed(
    g: SignatureGraph, tg: TypedGraph, fixed: Mapping[str, str], bound: frozenset[str]
) -> Iterator[dict[str, str]]:
    if len(g.nodes) > MAX_SIGNATURE_NODES:
        raise SignatureTooLarge(f"signature has {len(g.nodes)} nodes, limit is {MAX_SIGNATURE_NODES}")
    dom = _domain(g, tg, bound)
    order = [n.var for n in g.nodes]

    def go(i: int, m: dict[str, str]) -> Iterator[dict[str, str]]:
        if i == len(order):
            if all(not _forbidden_match(f, tg, m) for f in g.forbidden):
                yield dict(m)
            return
        v = order[i]
        used = {m[u] for u in order[:i]}
        choices = [fixed[v]] if v in fixed else dom[v]
        if v in fixed and fixed[v] not in dom[v]:
            return
        for c in choices:
            if c in used:
                continue  # one-to-one
            m[v] = c
            if _consistent(g, tg, m):
                yield from go(i + 1, m)
            del m[v]

    yield from go(0, {})


def _forbidden_match(f, tg: TypedGraph, m: Mapping[str, str]) -> bool:
    fixed = {p: m[a] for p, a in zip(f.params, f.args)}
    for hg in f.graphs:
        for _ in _embed(hg, tg, fixed, frozenset(f.params)):
            return True
    return False


def check_embedding_bruteforce(sig: SignatureGraph, facts: "FactDB | TypedGraph") -> list[dict[str, int]]:
    """Every one-to-one, type- and edge-preserving map from ``sig`` into the facts."""
    tg = facts if isinstance(facts, TypedGraph) else TypedGraph.from_facts(facts)
    out = [{k: int(v) for k, v in m.items()} for m in _embed(sig, tg, {}, frozenset())]
    out.sort(key=lambda m: tuple(m.values()))
    return out
