"""Andersen-style points-to over the SSA IR.

Flow- and context-insensitive, field-sensitive one level deep.  Abstract
objects are allocation sites ``o<L>``; heap cells are ``o<L>.<field>``.
Values returned by builtins and parameters of uncalled functions point to
nothing (they are opaque).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from ..osl.ir import Instruction, IRProgram, is_literal

INIT_FIELD = "<init>"


@dataclass(frozen=True)
class PointsTo:
    pts: Mapping[str, frozenset[str]]
    heap: Mapping[str, frozenset[str]]  # "o.f" -> objects

    def of(self, ref: str) -> frozenset[str]:
        return self.pts.get(ref, frozenset())

    def alias_pairs(self) -> list[tuple[str, str]]:
        by_obj: dict[str, list[str]] = {}
        for ref, objs in self.pts.items():
            for o in objs:
                by_obj.setdefault(o, []).append(ref)
        pairs = set()
        for refs in by_obj.values():
            for a in refs:
                for b in refs:
                    if a != b:
                        pairs.add((a, b))
        return sorted(pairs, key=lambda p: (_num(p[0]), _num(p[1])))

    def may_alias(self, a: str, b: str) -> bool:
        return a != b and bool(self.of(a) & self.of(b))


def _num(ref: str) -> tuple:
    return (0, int(ref), "") if ref.isdigit() else (1, 0, ref)


def interprocedural_links(
    ir: IRProgram, scope: Iterable[str], resolved: Mapping[int, str]
) -> tuple[list[tuple[int, str]], list[tuple[int, str]]]:
    """(formal label, actual ref) and (call label, returned ref) pairs for in-scope calls."""
    scope = set(scope)
    params: list[tuple[int, str]] = []
    returns: list[tuple[int, str]] = []
    for ins in ir.in_functions(scope):
        if ins.kind != "Call":
            continue
        callee = resolved.get(ins.label)
        if callee is None or callee not in scope or not ir.has_function(callee):
            continue
        fn = ir.function(callee)
        for formal, actual in zip(fn.formals, ins.operands):
            params.append((formal, actual))
        for label in fn.labels:
            ret = ir[label]
            if ret.kind == "Return" and ret.operands:
                returns.append((ins.label, ret.operands[0]))
    return params, returns


def compute_points_to(ir: IRProgram, scope: Iterable[str], resolved: Optional[Mapping[int, str]] = None) -> PointsTo:
    scope = set(scope)
    resolved = resolved or {}
    instrs = ir.in_functions(scope)
    params, returns = interprocedural_links(ir, scope, resolved)

    pts: dict[str, set[str]] = {}
    heap: dict[str, set[str]] = {}
    copy_edges: dict[str, set[str]] = {}  # src -> dsts
    loads: list[tuple[str, str, str]] = []  # (dst, base, field)
    stores: list[tuple[str, str, str]] = []  # (base, field, src)

    def edge(src: str, dst: str) -> None:
        if not is_literal(src):
            copy_edges.setdefault(src, set()).add(dst)

    for ins in instrs:
        L = ins.ref
        if ins.kind == "Alloc":
            pts.setdefault(L, set()).add(f"o{L}")
            for a in ins.operands:
                if not is_literal(a):
                    stores.append((L, INIT_FIELD, a))
        elif ins.kind == "Assign" and ins.op in ("copy", "phi"):
            for src in ins.operands:
                edge(src, L)
        elif ins.kind == "FieldLoad":
            loads.append((L, ins.operands[0], ins.field))
        elif ins.kind == "FieldStore":
            if not is_literal(ins.operands[1]):
                stores.append((ins.operands[0], ins.field, ins.operands[1]))
    for formal, actual in params:
        edge(actual, str(formal))
    for call, ret in returns:
        edge(ret, str(call))

    # naive worklist to a fixpoint; OSL programs are small
    changed = True
    while changed:
        changed = False
        for src, dsts in copy_edges.items():
            objs = pts.get(src)
            if not objs:
                continue
            for d in dsts:
                cur = pts.setdefault(d, set())
                if not objs <= cur:
                    cur |= objs
                    changed = True
        for base, fld, src in stores:
            objs = pts.get(src)
            if not objs:
                continue
            for o in pts.get(base, ()):
                cell = heap.setdefault(f"{o}.{fld}", set())
                if not objs <= cell:
                    cell |= objs
                    changed = True
        for dst, base, fld in loads:
            for o in list(pts.get(base, ())):
                objs = heap.get(f"{o}.{fld}")
                if objs:
                    cur = pts.setdefault(dst, set())
                    if not objs <= cur:
                        cur |= objs
                        changed = True
    return PointsTo(
        {k: frozenset(v) for k, v in pts.items() if v},
        {k: frozenset(v) for k, v in heap.items() if v},
    )
