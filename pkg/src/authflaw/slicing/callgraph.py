"""Call resolution over the IR."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..osl.ir import Instruction, IRProgram

log = logging.getLogger(__name__)

ROOT = "<root>"


@dataclass(frozen=True)
class CallEdge:
    caller: str
    callee: str
    label: int


@dataclass(frozen=True)
class Callgraph:
    nodes: tuple[str, ...]
    edges: tuple[CallEdge, ...]
    functions: frozenset[str] = frozenset()
    builtins: frozenset[str] = frozenset()
    resolved: dict = field(default_factory=dict, compare=False, repr=False)  # call label -> callee
    diagnostics: tuple[str, ...] = ()

    def callees(self, fn: str) -> list[str]:
        return sorted({e.callee for e in self.edges if e.caller == fn})

    def callers(self, fn: str) -> list[str]:
        return sorted({e.caller for e in self.edges if e.callee == fn})

    def roots(self) -> list[str]:
        """Declared functions that no other function calls."""
        called = {e.callee for e in self.edges if e.caller != e.callee}
        return sorted(f for f in self.functions if f not in called)

    def pairs(self) -> set[tuple[str, str]]:
        return {(e.caller, e.callee) for e in self.edges}

    def with_root(self) -> "Callgraph":
        """Add a virtual ``<root>`` calling every root function.

        The callgraph automaton reads callee names, so an entry method never
        appears in the words it accepts.  Starting from a virtual root lets a
        query mention the real endpoint functions by name.
        """
        extra = tuple(CallEdge(ROOT, f, 0) for f in self.roots())
        return Callgraph(
            tuple(sorted(set(self.nodes) | {ROOT})),
            extra + self.edges,
            self.functions,
            self.builtins,
            self.resolved,
            self.diagnostics,
        )


def resolve_callee(ins: Instruction, functions: Iterable[str], builtins: Iterable[str]) -> Optional[str]:
    """Resolve a call: qualified builtin ``recv.m``, then function ``m``, then builtin ``m``."""
    functions = functions if isinstance(functions, (set, frozenset)) else set(functions)
    builtins = builtins if isinstance(builtins, (set, frozenset)) else set(builtins)
    if ins.qualifier is not None:
        qualified = f"{ins.qualifier}.{ins.callee}"
        if qualified in builtins:
            return qualified
    if ins.callee in functions:
        return ins.callee
    if ins.callee in builtins:
        return ins.callee
    return None


def build_callgraph(ir: IRProgram, builtins: Iterable[str] = ()) -> Callgraph:
    functions = frozenset(ir.function_names)
    builtins = frozenset(builtins)
    edges: list[CallEdge] = []
    resolved: dict[int, str] = {}
    diagnostics: list[str] = []
    used_builtins: set[str] = set()
    for ins in ir:
        if ins.kind != "Call":
            continue
        callee = resolve_callee(ins, functions, builtins)
        if callee is None:
            name = f"{ins.qualifier}.{ins.callee}" if ins.qualifier else ins.callee
            msg = f"unresolved call to {name} at label {ins.label} in {ins.function}"
            diagnostics.append(msg)
            log.info(msg)
            continue
        resolved[ins.label] = callee
        edges.append(CallEdge(ins.function, callee, ins.label))
        if callee not in functions:
            used_builtins.add(callee)
    nodes = tuple(sorted(functions | used_builtins))
    return Callgraph(nodes, tuple(edges), functions, frozenset(used_builtins), resolved, tuple(diagnostics))
