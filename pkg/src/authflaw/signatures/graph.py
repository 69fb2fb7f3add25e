"""Signature graphs and the property signature record."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..datalog import Atom, DatalogError, Rule, Var

_DONT_CARE = re.compile(r"^_\d+$")


class SignatureError(ValueError):
    pass


@dataclass(frozen=True)
class SigNode:
    var: str
    types: frozenset[str] = frozenset()
    kind: str = "label"  # "label" or "branch"


@dataclass(frozen=True)
class BranchEdge:
    node: str
    cond: str
    true: Optional[str]
    false: Optional[str]


@dataclass(frozen=True)
class Forbidden:
    """A negated helper: no embedding of ``graphs[i]`` may extend the main one."""

    helper: str
    params: tuple[str, ...]
    args: tuple[str, ...]
    graphs: tuple["SignatureGraph", ...]


@dataclass(frozen=True)
class SignatureGraph:
    nodes: tuple[SigNode, ...]
    control: tuple[tuple[str, str], ...] = ()
    data: tuple[tuple[str, str], ...] = ()
    branches: tuple[BranchEdge, ...] = ()
    forbidden: tuple[Forbidden, ...] = ()

    @property
    def vars(self) -> tuple[str, ...]:
        return tuple(n.var for n in self.nodes)

    def node(self, var: str) -> SigNode:
        for n in self.nodes:
            if n.var == var:
                return n
        raise KeyError(var)

    @property
    def tags(self) -> set[str]:
        out = {t for n in self.nodes for t in n.types}
        for f in self.forbidden:
            for g in f.graphs:
                out |= g.tags
        return out

    @property
    def uses_branch(self) -> bool:
        return bool(self.branches) or any(g.uses_branch for f in self.forbidden for g in f.graphs)


@dataclass(frozen=True)
class PropertySignature:
    id: str
    disjuncts: tuple[SignatureGraph, ...]
    grants: tuple[str, ...] = ()
    endpoint_query: Optional[str] = None
    mode: str = "presence"
    description: str = ""
    source: str = field(default="", repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.mode not in ("presence", "absence"):
            raise SignatureError(f"{self.id}: mode must be presence or absence, got {self.mode!r}")
        if not self.disjuncts:
            raise SignatureError(f"{self.id}: no signature rule")

    @property
    def tags(self) -> set[str]:
        out: set[str] = set()
        for g in self.disjuncts:
            out |= g.tags
        return out

    @property
    def uses_branch(self) -> bool:
        return any(g.uses_branch for g in self.disjuncts)


def _var(t, where: str) -> Optional[str]:
    if isinstance(t, Var):
        return None if _DONT_CARE.match(t.name) else t.name
    raise SignatureError(f"{where}: expected a variable, got constant {t!r}")


def graph_from_body(
    body: Sequence[Atom],
    helpers: dict[str, tuple[tuple[str, ...], tuple["SignatureGraph", ...]]],
    where: str,
) -> SignatureGraph:
    """Translate a rule body over the query vocabulary into a signature graph."""
    order: list[str] = []
    types: dict[str, set[str]] = {}
    kinds: dict[str, str] = {}
    control: list[tuple[str, str]] = []
    data: list[tuple[str, str]] = []
    branches: list[BranchEdge] = []
    forbidden: list[Forbidden] = []

    def node(v: Optional[str]) -> Optional[str]:
        if v is not None and v not in types:
            order.append(v)
            types[v] = set()
        return v

    def required(t, what: str) -> str:
        v = _var(t, where)
        if v is None:
            raise SignatureError(f"{where}: don't-care not allowed as {what}")
        return v

    for a in body:
        if a.is_builtin:
            continue  # distinctness is implied by the embedding
        if a.negated:
            if a.pred not in helpers:
                raise SignatureError(f"{where}: negated atom {a} must name a helper predicate")
            params, graphs = helpers[a.pred]
            args = tuple(node(required(t, "helper argument")) for t in a.args)
            if len(args) != len(params):
                raise SignatureError(f"{where}: {a.pred} expects {len(params)} arguments")
            forbidden.append(Forbidden(a.pred, params, args, graphs))
            continue
        if a.pred in ("OAuthTag", "OauthTag"):
            if a.arity != 2 or isinstance(a.args[1], Var):
                raise SignatureError(f"{where}: OAuthTag needs a label variable and a tag constant")
            types[node(required(a.args[0], "tagged node"))].add(a.args[1])
        elif a.pred in ("flowTo", "followBy"):
            if a.arity != 2:
                raise SignatureError(f"{where}: {a.pred} takes two arguments")
            x, y = (node(required(t, f"{a.pred} endpoint")) for t in a.args)
            (data if a.pred == "flowTo" else control).append((x, y))
        elif a.pred == "branch":
            if a.arity != 4:
                raise SignatureError(f"{where}: branch takes four arguments")
            b = node(required(a.args[0], "branch node"))
            c = node(required(a.args[1], "branch condition"))
            t = node(_var(a.args[2], where))
            f = node(_var(a.args[3], where))
            kinds[b] = "branch"
            branches.append(BranchEdge(b, c, t, f))
        elif a.pred == "label":
            node(required(a.args[0], "label node"))
        else:
            raise SignatureError(f"{where}: unknown node or edge type {a.pred!r}")
    nodes = tuple(SigNode(v, frozenset(types[v]), kinds.get(v, "label")) for v in order)
    return SignatureGraph(nodes, tuple(control), tuple(data), tuple(branches), tuple(forbidden))


def signature_from_rules(
    pid: str,
    rules: Sequence[Rule],
    grants: Sequence[str] = (),
    endpoint_query: Optional[str] = None,
    mode: str = "presence",
    description: str = "",
    source: str = "",
) -> PropertySignature:
    """Main rules have head ``pid`` (any arity); every other head is a helper."""
    helpers: dict[str, tuple[tuple[str, ...], tuple[SignatureGraph, ...]]] = {}
    pending = [r for r in rules if r.head.pred != pid]
    # helpers may use earlier helpers; resolve in dependency order
    while pending:
        progress = False
        for r in list(pending):
            deps = {a.pred for a in r.body if a.negated}
            if deps - set(helpers):
                continue
            params = tuple(_var(t, f"{pid} helper {r.head.pred}") or "" for t in r.head.args)
            if any(not p for p in params):
                raise SignatureError(f"{pid}: helper {r.head.pred} head must list variables")
            g = graph_from_body(r.body, helpers, f"{pid} helper {r.head.pred}")
            old = helpers.get(r.head.pred)
            if old is not None and old[0] != params:
                raise SignatureError(f"{pid}: helper {r.head.pred} rules disagree on parameters")
            helpers[r.head.pred] = (params, (old[1] if old else ()) + (g,))
            pending.remove(r)
            progress = True
        if not progress:
            raise SignatureError(f"{pid}: recursive or undefined helper predicates")
    mains = [r for r in rules if r.head.pred == pid]
    if not mains:
        raise SignatureError(f"no rule with head {pid}")
    disjuncts = tuple(graph_from_body(r.body, helpers, pid) for r in mains)
    return PropertySignature(pid, disjuncts, tuple(grants), endpoint_query, mode, description, source)
