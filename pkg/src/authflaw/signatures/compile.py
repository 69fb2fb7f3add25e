"""Compile signature graphs to Datalog rules."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from ..datalog import Atom, Rule, Var, neq
from .graph import PropertySignature, SignatureGraph


@dataclass(frozen=True)
class CompiledSignature:
    rules: tuple[Rule, ...]
    heads: tuple[Atom, ...]  # one per disjunct, in disjunct order

    def text(self) -> str:
        return "\n".join(str(r) for r in self.rules)


def _term(v: Optional[str]):
    return Var("_") if v is None else Var(v)


def graph_body(g: SignatureGraph, bound: frozenset[str] = frozenset()) -> list[Atom]:
    """Atoms for ``g``: node types, edges, one-to-one constraints, forbidden helpers.

    Variables in ``bound`` are already tied to labels by the caller, so they
    get no ``label`` atom.
    """
    body: list[Atom] = []
    branch_nodes = {b.node for b in g.branches}
    for n in g.nodes:
        for t in sorted(n.types):
            body.append(Atom("OAuthTag", (Var(n.var), t)))
        if not n.types and n.var not in branch_nodes and n.var not in bound:
            body.append(Atom("label", (Var(n.var),)))
    for b in g.branches:
        body.append(Atom("branch", (Var(b.node), Var(b.cond), _term(b.true), _term(b.false))))
    for x, y in g.data:
        body.append(Atom("flowTo", (Var(x), Var(y))))
    for x, y in g.control:
        body.append(Atom("followBy", (Var(x), Var(y))))
    for a, b in combinations(g.vars, 2):
        body.append(neq(Var(a), Var(b)))
    for f in g.forbidden:
        body.append(Atom(f.helper, tuple(Var(a) for a in f.args), negated=True))
    return body


def compile_signature(sig: PropertySignature) -> CompiledSignature:
    rules: list[Rule] = []
    done: set[str] = set()

    def helpers(g: SignatureGraph) -> None:
        for f in g.forbidden:
            if f.helper in done:
                continue
            done.add(f.helper)
            for hg in f.graphs:
                helpers(hg)
                head = Atom(f.helper, tuple(Var(p) for p in f.params))
                rules.append(Rule(head, graph_body(hg, frozenset(f.params))))

    heads: list[Atom] = []
    for i, g in enumerate(sig.disjuncts):
        helpers(g)
        head = Atom(f"{sig.id}__{i}", tuple(Var(v) for v in g.vars))
        rules.append(Rule(head, graph_body(g)))
        heads.append(head)
    return CompiledSignature(tuple(rules), tuple(heads))
