"""System dependence graph over a set of in-scope functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..osl.cfg import CFG
from ..osl.ir import IRProgram, is_literal
from ..slicing.callgraph import Callgraph
from .pointsto import INIT_FIELD, PointsTo, compute_points_to, interprocedural_links

Fact = tuple[str, tuple[str, ...]]


class ScopeError(ValueError):
    pass


@dataclass(frozen=True)
class ControlEdge:
    src: int
    dst: int
    kind: str  # control, call, param-in, param-out


@dataclass(frozen=True)
class DataEdge:
    src: int
    dst: int
    d: str  # the value (ref or heap cell) carried along the edge


@dataclass(frozen=True)
class SDG:
    scope: frozenset[str]
    V: tuple[int, ...]
    X: tuple[ControlEdge, ...]
    Y: tuple[DataEdge, ...]
    facts: tuple[Fact, ...] = field(repr=False)
    points_to: Optional[PointsTo] = field(default=None, repr=False, compare=False)

    @property
    def node_count(self) -> int:
        return len(self.V)

    @property
    def edge_count(self) -> int:
        return len(self.X) + len(self.Y)

    def facts_of(self, pred: str) -> list[tuple[str, ...]]:
        return [args for p, args in self.facts if p == pred]


def _key(ref: str) -> tuple:
    return (0, int(ref), "") if ref.isdigit() else (1, 0, ref)


def _fact_key(f: Fact) -> tuple:
    return (f[0], tuple(_key(a) for a in f[1]))


def build_sdg(ir: IRProgram, cfg: CFG, cg: Callgraph, scope: Iterable[str]) -> SDG:
    scope = frozenset(scope)
    if not scope:
        raise ScopeError("empty scope")
    unknown = sorted(s for s in scope if not ir.has_function(s))
    if unknown:
        raise ScopeError(f"scope names unknown functions: {', '.join(unknown)}")

    instrs = ir.in_functions(scope)
    V = tuple(i.label for i in instrs)
    in_scope = set(V)
    pt = compute_points_to(ir, scope, cg.resolved)
    params, returns = interprocedural_links(ir, scope, cg.resolved)

    facts: list[Fact] = [("label", (str(L),)) for L in V]
    facts.extend(ir.base_facts(scope))

    # data flow through parameters, returns, builtins and the heap
    extra: list[Fact] = []
    for formal, actual in params:
        if not is_literal(actual):
            extra.append(("assign", (str(formal), str(formal), actual)))
    for call, ret in returns:
        if not is_literal(ret):
            extra.append(("assign", (str(call), str(call), ret)))

    def cells(ref: str) -> list[str]:
        return sorted(f"{o}.{f}" for o in pt.of(ref) for f in heap_fields.get(o, ()))

    heap_fields: dict[str, set[str]] = {}
    for ins in instrs:
        if ins.kind == "FieldStore":
            for o in pt.of(ins.operands[0]):
                heap_fields.setdefault(o, set()).add(ins.field)
        elif ins.kind == "Alloc" and any(not is_literal(a) for a in ins.operands):
            heap_fields.setdefault(f"o{ins.ref}", set()).add(INIT_FIELD)

    for ins in instrs:
        L = ins.ref
        if ins.kind == "FieldStore":
            base, val = ins.operands
            if is_literal(val):
                continue
            objs = pt.of(base)
            if objs:
                for o in sorted(objs):
                    extra.append(("assign", (L, f"{o}.{ins.field}", val)))
            elif not is_literal(base):
                # opaque object: its contents are folded into the reference itself
                extra.append(("assign", (L, base, val)))
        elif ins.kind == "Alloc":
            for a in ins.operands:
                if not is_literal(a):
                    extra.append(("assign", (L, f"o{L}.{INIT_FIELD}", a)))
        elif ins.kind == "FieldLoad":
            base = ins.operands[0]
            objs = pt.of(base)
            if objs:
                for o in sorted(objs):
                    for fld in (ins.field, INIT_FIELD):
                        if fld in heap_fields.get(o, ()):
                            extra.append(("assign", (L, L, f"{o}.{fld}")))
            elif not is_literal(base):
                extra.append(("assign", (L, L, base)))
        elif ins.kind == "Call":
            callee = cg.resolved.get(ins.label)
            if callee is not None and callee in scope:
                continue  # handled by parameter/return links
            sources = [r for r in ins.operands if not is_literal(r)]
            if ins.receiver is not None:
                sources.insert(0, ins.receiver)
            for src in sources:
                extra.append(("assign", (L, L, src)))
                for cell in cells(src):
                    extra.append(("assign", (L, L, cell)))

    names = {str(L) for L in in_scope}
    alias = [("alias", pair) for pair in pt.alias_pairs() if pair[0] in names and pair[1] in names]

    follow = [("follow", (str(a), str(b))) for a, b in cfg.follow if a in in_scope]
    for ins in instrs:
        if ins.kind == "Call":
            callee = cg.resolved.get(ins.label)
            if callee in scope and ir.has_function(callee):
                follow.append(("follow", (ins.ref, str(ir.function(callee).entry))))
    for ins in instrs:
        callee = cg.resolved.get(ins.label) if ins.kind == "Call" else None
        if callee is not None:
            facts.append(("resolved", (ins.ref, callee)))

    all_facts = sorted(set(facts) | set(extra) | set(alias) | set(follow), key=_fact_key)

    X = _control_edges(ir, instrs, scope, cg, params, returns)
    Y = _data_edges(all_facts, in_scope, instrs)
    return SDG(scope, V, X, Y, tuple(all_facts), pt)


def _control_edges(ir, instrs, scope, cg, params, returns) -> tuple[ControlEdge, ...]:
    edges: set[ControlEdge] = set()
    for ins in instrs:
        if ins.parent:
            edges.add(ControlEdge(ins.parent, ins.label, "control"))
        if ins.kind == "Call":
            callee = cg.resolved.get(ins.label)
            if callee in scope and ir.has_function(callee):
                fn = ir.function(callee)
                edges.add(ControlEdge(ins.label, fn.entry, "call"))
                for formal in fn.formals[: len(ins.operands)]:
                    edges.add(ControlEdge(ins.label, formal, "param-in"))
                for label in fn.labels:
                    if ir[label].kind == "Return":
                        edges.add(ControlEdge(label, ins.label, "param-out"))
    return tuple(sorted(edges, key=lambda e: (e.src, e.dst, e.kind)))


def _data_edges(facts: list[Fact], in_scope: set[int], instrs) -> tuple[DataEdge, ...]:
    """Def-use edges: from each definition of a value to each statement reading it."""
    defs: dict[str, set[int]] = {}
    for pred, args in facts:
        if pred in ("assign", "alloc"):
            defs.setdefault(args[1], set()).add(int(args[0]))

    def sites(ref: str) -> set[int]:
        if ref.isdigit() and int(ref) in in_scope:
            return {int(ref)}
        return defs.get(ref, set())

    edges: set[DataEdge] = set()
    for ins in instrs:
        for ref in ins.uses():
            for s in sites(ref):
                if s != ins.label:
                    edges.add(DataEdge(s, ins.label, ref))
    for pred, args in facts:
        if pred == "assign":
            dst = int(args[0])
            for s in sites(args[2]):
                if s != dst:
                    edges.add(DataEdge(s, dst, args[2]))
    return tuple(sorted(edges, key=lambda e: (e.src, e.dst, e.d)))
