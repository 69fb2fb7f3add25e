"""Finite automata over method names: query NFA, callgraph automaton, product."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

from .callgraph import Callgraph
from .query import WILDCARD, Alt, Dot, Lit, Query, Seq, Star

EPS = None


def _key(x: object) -> tuple:
    # lexicographic order over heterogeneous states (ints, strings, pairs)
    if isinstance(x, tuple):
        return (2, tuple(_key(y) for y in x))
    if isinstance(x, int):
        return (0, x)
    return (1, str(x))


def _tkey(t: tuple) -> tuple:
    s, a, d = t
    return (_key(s), "" if a is None else a, _key(d))


@dataclass(frozen=True)
class Automaton:
    states: tuple
    transitions: tuple  # (src, symbol or None, dst)
    initial: frozenset
    accepting: frozenset

    @staticmethod
    def make(states: Iterable, transitions: Iterable, initial: Iterable, accepting: Iterable) -> "Automaton":
        return Automaton(
            tuple(sorted(set(states), key=_key)),
            tuple(sorted(set(transitions), key=_tkey)),
            frozenset(initial),
            frozenset(accepting),
        )

    @property
    def alphabet(self) -> tuple[str, ...]:
        return tuple(sorted({a for _, a, _ in self.transitions if a is not None}))

    @property
    def has_epsilon(self) -> bool:
        return any(a is None for _, a, _ in self.transitions)

    def out(self) -> dict:
        table: dict = {}
        for s, a, d in self.transitions:
            table.setdefault(s, []).append((a, d))
        return table

    def epsilon_closure(self, states: Iterable) -> set:
        table = self.out()
        seen = set(states)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for a, d in table.get(s, ()):
                if a is None and d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def accepts(self, word: Sequence[str]) -> bool:
        table = self.out()
        cur = self.epsilon_closure(self.initial)
        for sym in word:
            nxt = set()
            for s in cur:
                for a, d in table.get(s, ()):
                    if a is not None and (a == sym or a == WILDCARD):
                        nxt.add(d)
            cur = self.epsilon_closure(nxt)
            if not cur:
                return False
        return bool(cur & self.accepting)

    def is_empty(self) -> bool:
        return not self.coreachable_states() & self.reachable_states()

    def reachable_states(self) -> set:
        table = self.out()
        seen = set(self.initial)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for _, d in table.get(s, ()):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
        return seen

    def coreachable_states(self) -> set:
        back: dict = {}
        for s, _, d in self.transitions:
            back.setdefault(d, []).append(s)
        seen = set(self.accepting)
        stack = list(seen)
        while stack:
            s = stack.pop()
            for p in back.get(s, ()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen

    def restrict(self, keep: set) -> "Automaton":
        return Automaton.make(
            [s for s in self.states if s in keep],
            [t for t in self.transitions if t[0] in keep and t[2] in keep],
            self.initial & keep,
            self.accepting & keep,
        )

    def prune(self) -> "Automaton":
        return self.restrict(self.reachable_states())

    def trim(self) -> "Automaton":
        return self.restrict(self.reachable_states() & self.coreachable_states())


def query_to_nfa(q: Query) -> Automaton:
    """Thompson construction; ``.`` becomes a wildcard transition."""
    counter = itertools.count()
    transitions: list = []

    def build(node: Query) -> tuple[int, int]:
        if isinstance(node, (Lit, Dot)):
            s, f = next(counter), next(counter)
            transitions.append((s, node.name if isinstance(node, Lit) else WILDCARD, f))
            return s, f
        if isinstance(node, Seq):
            s1, f1 = build(node.left)
            s2, f2 = build(node.right)
            transitions.append((f1, EPS, s2))
            return s1, f2
        if isinstance(node, Alt):
            s, f = next(counter), next(counter)
            s1, f1 = build(node.left)
            s2, f2 = build(node.right)
            transitions.extend([(s, EPS, s1), (s, EPS, s2), (f1, EPS, f), (f2, EPS, f)])
            return s, f
        if isinstance(node, Star):
            s, f = next(counter), next(counter)
            s1, f1 = build(node.inner)
            transitions.extend([(s, EPS, s1), (s, EPS, f), (f1, EPS, s1), (f1, EPS, f)])
            return s, f
        raise TypeError(f"unknown query node {node!r}")

    start, final = build(q)
    return Automaton.make(range(next(counter)), transitions, {start}, {final})


def remove_epsilon(nfa: Automaton) -> Automaton:
    if not nfa.has_epsilon:
        return nfa
    closures = {s: nfa.epsilon_closure({s}) for s in nfa.states}
    table = nfa.out()
    transitions = set()
    for s in nfa.states:
        for u in closures[s]:
            for a, d in table.get(u, ()):
                if a is not None:
                    transitions.add((s, a, d))
    accepting = {s for s in nfa.states if closures[s] & nfa.accepting}
    return Automaton.make(nfa.states, transitions, nfa.initial, accepting).prune()


def callgraph_to_automaton(cg: Callgraph, entries: Iterable[str]) -> Automaton:
    """One state per method, a transition ``(f, g, g)`` per call edge, all accepting."""
    entries = set(entries)
    if not entries:
        raise ValueError("callgraph automaton needs at least one entry method")
    missing = entries - set(cg.nodes)
    if missing:
        raise ValueError(f"entry methods not in callgraph: {', '.join(sorted(missing))}")
    transitions = {(e.caller, e.callee, e.callee) for e in cg.edges}
    return Automaton.make(cg.nodes, transitions, entries, cg.nodes)


def intersect(cga: Automaton, qa: Automaton) -> Automaton:
    """Product automaton over pairs (CGA state, QA state), reachable part only."""
    cga = remove_epsilon(cga)
    qa = remove_epsilon(qa)
    c_out = cga.out()
    q_out = qa.out()
    start = {(c, q) for c in cga.initial for q in qa.initial}
    seen = set(start)
    queue = deque(sorted(start, key=_key))
    transitions = set()
    while queue:
        c, q = queue.popleft()
        for a, c2 in c_out.get(c, ()):
            for b, q2 in q_out.get(q, ()):
                if b == a or b == WILDCARD:
                    nxt = (c2, q2)
                    transitions.add(((c, q), a, nxt))
                    if nxt not in seen:
                        seen.add(nxt)
                        queue.append(nxt)
    accepting = {(c, q) for c, q in seen if c in cga.accepting and q in qa.accepting}
    return Automaton.make(seen, transitions, start, accepting)


def extract_subcallgraph(product: Automaton, cg: Optional[Callgraph] = None) -> set[str]:
    """Methods (CGA components) of product states on an initial-to-accepting path."""
    live = product.reachable_states() & product.coreachable_states()
    methods = {c for c, _ in live}
    if cg is not None:
        methods &= set(cg.nodes)
    return methods
