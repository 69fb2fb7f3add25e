"""A small Datalog engine with stratified negation and semi-naive evaluation.

Constants are strings.  Variables are :class:`Var` instances; the don't-care
variable ``_`` is renamed to a fresh variable per occurrence when a rule or
query is built.  The only builtin is the binary inequality ``!=``.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

log = logging.getLogger(__name__)

DEFAULT_MAX_TUPLES = 10**7
NEQ = "!="


class DatalogError(Exception):
    pass


class ArityError(DatalogError):
    pass


class StratificationError(DatalogError):
    def __init__(self, cycle: Sequence[str]):
        self.cycle = tuple(cycle)
        super().__init__("negation cycle: " + " -> ".join(self.cycle))


class ResourceLimitError(DatalogError):
    pass


class EvaluationTimeout(DatalogError):
    pass


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return self.name


Term = Union[Var, str]
_fresh = itertools.count()


def is_var(t: Term) -> bool:
    return isinstance(t, Var)


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()
    negated: bool = False

    def __init__(self, pred: str, args: Iterable[Term] = (), negated: bool = False):
        object.__setattr__(self, "pred", pred)
        object.__setattr__(self, "args", tuple(args))
        object.__setattr__(self, "negated", negated)

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_builtin(self) -> bool:
        return self.pred == NEQ

    def vars(self) -> list[Var]:
        return [a for a in self.args if isinstance(a, Var)]

    @property
    def ground(self) -> bool:
        return not self.vars()

    def __str__(self) -> str:
        def show(t: Term) -> str:
            return t.name if isinstance(t, Var) else '"' + t.replace('"', '\\"') + '"'

        if self.is_builtin:
            return f"{show(self.args[0])} != {show(self.args[1])}"
        body = f"{self.pred}({', '.join(show(a) for a in self.args)})" if self.args else self.pred
        return ("!" if self.negated else "") + body


def neq(a: Term, b: Term) -> Atom:
    return Atom(NEQ, (a, b))


def _rename_dont_cares(atoms: Iterable[Atom]) -> list[Atom]:
    out = []
    for atom in atoms:
        args = tuple(Var(f"_{next(_fresh)}") if isinstance(a, Var) and a.name == "_" else a for a in atom.args)
        out.append(Atom(atom.pred, args, atom.negated))
    return out


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Atom, ...]

    def __init__(self, head: Atom, body: Iterable[Atom]):
        body = tuple(_rename_dont_cares(body))
        object.__setattr__(self, "head", head)
        object.__setattr__(self, "body", body)
        if head.negated or head.is_builtin:
            raise DatalogError(f"invalid rule head {head}")
        if any(isinstance(a, Var) and a.name == "_" for a in head.args):
            raise DatalogError(f"don't-care in rule head {head}")
        check_safety(body, head.vars(), str(self))

    @property
    def positive(self) -> list[Atom]:
        return [a for a in self.body if not a.negated and not a.is_builtin]

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(a) for a in self.body)}."


def check_safety(body: Sequence[Atom], extra: Iterable[Var] = (), where: str = "") -> None:
    bound = {v for a in body if not a.negated and not a.is_builtin for v in a.vars()}
    for v in extra:
        if v not in bound:
            raise DatalogError(f"unsafe variable {v.name} in {where}")
    for a in body:
        if a.negated or a.is_builtin:
            for v in a.vars():
                if v not in bound:
                    raise DatalogError(f"unsafe variable {v.name} in {a} ({where})")
        if a.is_builtin and a.arity != 2:
            raise DatalogError(f"{NEQ} takes two arguments")


class Relation:
    """A set of tuples with lazily built hash indices on bound positions."""

    __slots__ = ("tuples", "indices")

    def __init__(self, tuples: Iterable[tuple] = ()):
        self.tuples: set[tuple] = set(tuples)
        self.indices: dict[tuple[int, ...], dict[tuple, list[tuple]]] = {}

    def add(self, t: tuple) -> bool:
        if t in self.tuples:
            return False
        self.tuples.add(t)
        for positions, index in self.indices.items():
            index.setdefault(tuple(t[p] for p in positions), []).append(t)
        return True

    def lookup(self, positions: tuple[int, ...], key: tuple) -> Iterable[tuple]:
        if not positions:
            return self.tuples
        index = self.indices.get(positions)
        if index is None:
            index = {}
            if len(positions) == 1:
                (p,) = positions
                for t in self.tuples:
                    k = (t[p],)
                    bucket = index.get(k)
                    if bucket is None:
                        index[k] = [t]
                    else:
                        bucket.append(t)
            else:
                for t in self.tuples:
                    index.setdefault(tuple(t[p] for p in positions), []).append(t)
            self.indices[positions] = index
        return index.get(key, ())

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t: tuple) -> bool:
        return t in self.tuples

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.tuples)


_EMPTY = Relation()


class FactDB:
    """Map from predicate name to a set of constant tuples."""

    def __init__(self, facts: Iterable = ()):
        self.relations: dict[str, Relation] = {}
        self.arities: dict[str, int] = {}
        self.strata: dict[str, int] = {}
        self._shared: set[str] = set()  # relations borrowed from another database
        for item in facts:
            if isinstance(item, Atom):
                self.add(item)
            else:
                pred, args = item
                self.add_tuple(pred, tuple(args))

    def declare(self, pred: str, arity: int) -> None:
        known = self.arities.get(pred)
        if known is None:
            self.arities[pred] = arity
            self.relations.setdefault(pred, Relation())
        elif known != arity:
            raise ArityError(f"{pred} has arity {known}, got {arity}")

    def add_tuple(self, pred: str, t: tuple) -> bool:
        self.declare(pred, len(t))
        for c in t:
            if not isinstance(c, str):
                raise DatalogError(f"non-constant argument {c!r} in fact {pred}")
        if pred in self._shared:
            self.relations[pred] = Relation(self.relations[pred].tuples)
            self._shared.discard(pred)
        return self.relations[pred].add(t)

    def add(self, atom: Atom) -> bool:
        if atom.negated or atom.is_builtin:
            raise DatalogError(f"cannot assert {atom}")
        if not atom.ground:
            raise DatalogError(f"fact {atom} is not ground")
        return self.add_tuple(atom.pred, atom.args)

    def relation(self, pred: str) -> Relation:
        return self.relations.get(pred, _EMPTY)

    def facts(self, pred: str) -> set[tuple]:
        return set(self.relation(pred).tuples)

    def contains(self, pred: str, t: tuple) -> bool:
        return t in self.relation(pred)

    def predicates(self) -> list[str]:
        return sorted(self.relations)

    def size(self, pred: Optional[str] = None) -> int:
        if pred is not None:
            return len(self.relation(pred))
        return sum(len(r) for r in self.relations.values())

    def __len__(self) -> int:
        return self.size()

    def copy(self) -> "FactDB":
        db = FactDB()
        db.arities = dict(self.arities)
        db.strata = dict(self.strata)
        db.relations = {p: Relation(r.tuples) for p, r in self.relations.items()}
        return db

    def overlay(self, replace: Optional[Mapping[str, Iterable[tuple]]] = None) -> "FactDB":
        """A new database sharing this one's relations, with some relations replaced.

        Shared relations must not be mutated through the overlay; :func:`evaluate`
        copies every relation it writes.
        """
        db = FactDB()
        db.arities = dict(self.arities)
        db.strata = dict(self.strata)
        db.relations = dict(self.relations)
        db._shared = set(self.relations)
        for pred, tuples in (replace or {}).items():
            db.relations[pred] = Relation()
            db._shared.discard(pred)
            for t in tuples:
                db.add_tuple(pred, tuple(t))
        return db

    def as_dict(self) -> dict[str, set[tuple]]:
        return {p: set(r.tuples) for p, r in self.relations.items() if r.tuples}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactDB):
            return NotImplemented
        return self.as_dict() == other.as_dict()


def add_fact(db: FactDB, atom: Atom) -> FactDB:
    db.add(atom)
    return db


# stratification


def _dependency_graph(rules: Sequence[Rule]) -> dict[str, set[tuple[str, bool]]]:
    deps: dict[str, set[tuple[str, bool]]] = {}
    for r in rules:
        edges = deps.setdefault(r.head.pred, set())
        for a in r.body:
            if not a.is_builtin:
                edges.add((a.pred, a.negated))
    return deps


def _sccs(nodes: Sequence[str], succ: Mapping[str, Iterable[str]]) -> list[list[str]]:
    """Tarjan's algorithm; components come out in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    out: list[list[str]] = []
    counter = itertools.count()

    def visit(v: str) -> None:
        # iterative to survive deep dependency chains
        work = [(v, iter(sorted(succ.get(v, ()))))]
        index[v] = low[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ.get(w, ())))))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(sorted(comp))

    for n in nodes:
        if n not in index:
            visit(n)
    return out


def _negative_cycle(comp: Sequence[str], deps: Mapping[str, set[tuple[str, bool]]]) -> Optional[list[str]]:
    members = set(comp)
    for head in comp:
        for pred, neg in sorted(deps.get(head, ())):
            if neg and pred in members:
                # walk back from pred to head inside the component
                path = _path(pred, head, members, deps)
                return [head] + path
    return None


def _path(src: str, dst: str, members: set[str], deps: Mapping[str, set[tuple[str, bool]]]) -> list[str]:
    prev: dict[str, Optional[str]] = {src: None}
    queue = [src]
    while queue:
        cur = queue.pop(0)
        if cur == dst:
            break
        for nxt, _ in sorted(deps.get(cur, ())):
            if nxt in members and nxt not in prev:
                prev[nxt] = cur
                queue.append(nxt)
    path = [dst]
    while prev.get(path[-1]) is not None:
        path.append(prev[path[-1]])
    return list(reversed(path))


def stratify(rules: Sequence[Rule]) -> list[list[str]]:
    """Group derived predicates into strata, lowest first.

    A predicate's stratum is strictly above every predicate it uses under
    negation and at least that of every predicate it uses positively.
    Extensional predicates are not listed.
    """
    deps = _dependency_graph(rules)
    heads = sorted(deps)
    comps = _sccs(heads, {h: [p for p, _ in deps[h] if p in deps] for h in heads})
    level: dict[str, int] = {}
    for comp in comps:  # reverse topological: dependencies first
        cycle = _negative_cycle(comp, deps)
        if cycle is not None:
            raise StratificationError(cycle)
        lv = 0
        members = set(comp)
        for head in comp:
            for pred, neg in deps[head]:
                if pred in members or pred not in level:
                    continue
                lv = max(lv, level[pred] + (1 if neg else 0))
        for head in comp:
            level[head] = lv
    if not level:
        return []
    strata: list[list[str]] = [[] for _ in range(max(level.values()) + 1)]
    for pred, lv in level.items():
        strata[lv].append(pred)
    return [sorted(s) for s in strata if s]


# evaluation


class _Budget:
    def __init__(self, max_tuples: int, deadline: Optional[float], start: int):
        self.max_tuples = max_tuples
        self.deadline = deadline
        self.count = start
        self.ticks = 0

    def added(self, n: int = 1) -> None:
        self.count += n
        if self.count > self.max_tuples:
            raise ResourceLimitError(f"derived tuple cap of {self.max_tuples} exceeded")

    def tick(self) -> None:
        self.ticks += 1
        if self.deadline is not None and self.ticks % 1024 == 0 and time.monotonic() > self.deadline:
            raise EvaluationTimeout("evaluation deadline exceeded")


def _plan(body: Sequence[Atom], first: Optional[int]) -> list[int]:
    """Order positive atoms so each step binds as much as possible; ``first`` leads."""
    positive = [i for i, a in enumerate(body) if not a.negated and not a.is_builtin]
    order: list[int] = []
    bound: set[Var] = set()
    if first is not None:
        order.append(first)
        bound.update(body[first].vars())
        positive.remove(first)
    while positive:
        best = max(
            positive,
            key=lambda i: (sum(1 for a in body[i].args if not isinstance(a, Var) or a in bound), -i),
        )
        order.append(best)
        bound.update(body[best].vars())
        positive.remove(best)
    return order


def _filters_after(body: Sequence[Atom], order: Sequence[int]) -> list[list[Atom]]:
    """For each step, the negated/builtin atoms that become fully bound there."""
    pending = [a for a in body if a.negated or a.is_builtin]
    bound: set[Var] = set()
    out: list[list[Atom]] = []
    for i in order:
        bound.update(body[i].vars())
        ready = [a for a in pending if all(v in bound for v in a.vars())]
        pending = [a for a in pending if a not in ready]
        out.append(ready)
    if not order:
        out.append(pending)
    return out


@dataclass
class _Step:
    atom: int
    positions: tuple[int, ...]  # looked-up argument positions
    key: tuple  # per position: slot index (int) or constant (str, wrapped in a 1-tuple)
    binds: tuple[tuple[int, int], ...]  # (argument position, slot) assigned here
    checks: tuple[tuple[int, int], ...]  # repeated variable within the atom
    filters: tuple  # (pred or None for !=, ((is_slot, slot|const), ...))


@dataclass
class _Plan:
    slots: dict[Var, int]
    steps: list[_Step]
    tail_filters: tuple  # filters with no positive atom (body of only builtins/negations)


def _compile_filter(atom: Atom, slots: dict[Var, int]):
    args = tuple((True, slots[a]) if isinstance(a, Var) else (False, a) for a in atom.args)
    return (None if atom.is_builtin else atom.pred, args)


def _compile_plan(body: Sequence[Atom], first: Optional[int]) -> _Plan:
    order = _plan(body, first)
    filters = _filters_after(body, order)
    slots: dict[Var, int] = {}
    steps = []
    for k, i in enumerate(order):
        atom = body[i]
        positions, key, binds, checks = [], [], [], []
        local: dict[Var, int] = {}
        for p, a in enumerate(atom.args):
            if not isinstance(a, Var):
                positions.append(p)
                key.append((a,))
            elif a in slots:
                positions.append(p)
                key.append(slots[a])
            elif a in local:
                checks.append((p, local[a]))
            else:
                local[a] = len(slots) + len(local)
                binds.append((p, local[a]))
        slots.update(local)
        steps.append(_Step(i, tuple(positions), tuple(key), tuple(binds), tuple(checks),
                           tuple(_compile_filter(f, slots) for f in filters[k])))
    tail = tuple(_compile_filter(f, slots) for f in filters[0]) if not order else ()
    return _Plan(slots, steps, tail)


def _filters_pass(filters, env: list, db: FactDB) -> bool:
    for pred, args in filters:
        vals = tuple(env[x] if is_slot else x for is_slot, x in args)
        if pred is None:
            if vals[0] == vals[1]:
                return False
        elif db.contains(pred, vals):
            return False
    return True


def _join_slots(
    plan: _Plan,
    sources: Sequence[Relation],
    skip: Sequence[Optional[Relation]],
    db: FactDB,
    budget: Optional[_Budget],
) -> Iterator[list]:
    """Bindings as slot lists (see ``plan.slots``)."""
    steps = plan.steps
    if not steps:
        if _filters_pass(plan.tail_filters, [], db):
            yield []
        return
    last = len(steps) - 1
    env: list = [None] * len(plan.slots)

    def step(k: int) -> Iterator[list]:
        st = steps[k]
        key = tuple(env[x] if isinstance(x, int) else x[0] for x in st.key)
        excluded = skip[st.atom]
        binds, checks, filters = st.binds, st.checks, st.filters
        for t in sources[st.atom].lookup(st.positions, key):
            if budget is not None:
                budget.tick()
            if excluded is not None and t in excluded:
                continue
            for p, slot in binds:
                env[slot] = t[p]
            if checks and any(env[slot] != t[p] for p, slot in checks):
                continue
            if filters and not _filters_pass(filters, env, db):
                continue
            if k == last:
                yield env
            else:
                yield from step(k + 1)

    yield from step(0)


def _join(
    body: Sequence[Atom],
    sources: Sequence[Relation],
    skip: Sequence[Optional[Relation]],
    db: FactDB,
    first: Optional[int],
    budget: Optional[_Budget],
) -> Iterator[dict]:
    plan = _compile_plan(body, first)
    names = list(plan.slots.items())
    for env in _join_slots(plan, sources, skip, db, budget):
        yield {v: env[i] for v, i in names}


def _head_builder(head: Atom, plan: _Plan):
    spec = tuple((True, plan.slots[a]) if isinstance(a, Var) else (False, a) for a in head.args)
    return lambda env: tuple(env[x] if is_slot else x for is_slot, x in spec)


def _check_arities(db: FactDB, rules: Sequence[Rule]) -> None:
    seen = dict(db.arities)
    for r in rules:
        for a in (r.head, *r.body):
            if a.is_builtin:
                continue
            known = seen.setdefault(a.pred, a.arity)
            if known != a.arity:
                raise ArityError(f"{a.pred} used with arity {a.arity} and {known}")


def evaluate(
    db: FactDB,
    rules: Sequence[Rule],
    max_tuples: int = DEFAULT_MAX_TUPLES,
    deadline: Optional[float] = None,
) -> FactDB:
    """Least fixpoint of ``rules`` over ``db``, stratum by stratum, semi-naively.

    The input database is not modified.
    """
    _check_arities(db, rules)
    out = db.overlay()
    for r in rules:
        out.declare(r.head.pred, r.head.arity)
        # rule heads are written during evaluation, so they get private copies
        out.relations[r.head.pred] = Relation(db.relation(r.head.pred).tuples)
        out._shared.discard(r.head.pred)
    budget = _Budget(max_tuples, deadline, out.size())
    for level, preds in enumerate(stratify(rules)):
        members = set(preds)
        for p in preds:
            out.strata[p] = level
        stratum = [r for r in rules if r.head.pred in members]
        _evaluate_stratum(out, stratum, members, budget)
    return out


def _evaluate_stratum(db: FactDB, rules: Sequence[Rule], members: set[str], budget: _Budget) -> None:
    # first round: every rule over the full relations
    delta: dict[str, Relation] = {p: Relation() for p in members}
    for r in rules:
        sources = [db.relation(a.pred) for a in r.body]
        plan = _compile_plan(r.body, None)
        build = _head_builder(r.head, plan)
        target, out = db.relation(r.head.pred), delta[r.head.pred]
        for env in _join_slots(plan, sources, [None] * len(r.body), db, budget):
            t = build(env)
            if t not in target:
                out.add(t)
    _commit(db, delta, budget)

    recursive = [
        (r, [i for i, a in enumerate(r.body) if not a.negated and a.pred in members]) for r in rules
    ]
    recursive = [(r, idx) for r, idx in recursive if idx]
    plans = {(id(r), i): _compile_plan(r.body, i) for r, idx in recursive for i in idx}
    while any(len(d) for d in delta.values()):
        new: dict[str, Relation] = {p: Relation() for p in members}
        for r, idx in recursive:
            for n, i in enumerate(idx):
                if not len(delta[r.body[i].pred]):
                    continue
                sources: list[Relation] = []
                skip: list[Optional[Relation]] = []
                for j, a in enumerate(r.body):
                    if j == i:
                        sources.append(delta[a.pred])
                        skip.append(None)
                    elif j in idx[:n]:
                        # earlier recursive atoms see only the previous state
                        sources.append(db.relation(a.pred))
                        skip.append(delta[a.pred])
                    else:
                        sources.append(db.relation(a.pred))
                        skip.append(None)
                target, out = db.relation(r.head.pred), new[r.head.pred]
                plan = plans[(id(r), i)]
                build = _head_builder(r.head, plan)
                for env in _join_slots(plan, sources, skip, db, budget):
                    t = build(env)
                    if t not in target:
                        out.add(t)
        delta = new
        _commit(db, delta, budget)


def _commit(db: FactDB, delta: Mapping[str, Relation], budget: _Budget) -> None:
    for pred, rel in delta.items():
        added = 0
        for t in rel:
            if db.relations[pred].add(t):
                added += 1
        if added:
            budget.added(added)


# queries


def sort_key(value: str) -> tuple:
    """Numeric-aware ordering: digit strings compare as integers, before text."""
    return (0, int(value), "") if value.isdigit() else (1, 0, value)


def query(db: FactDB, body: Sequence[Atom], deadline: Optional[float] = None) -> list[dict[str, str]]:
    """All bindings of the named variables satisfying ``body``, sorted."""
    atoms = _rename_dont_cares(body)
    check_safety(atoms, (), "query")
    for a in atoms:
        if not a.is_builtin and a.pred not in db.arities:
            log.warning("query uses unknown predicate %s", a.pred)
            if not a.negated:
                return []
        elif not a.is_builtin and db.arities[a.pred] != a.arity:
            raise ArityError(f"{a.pred} has arity {db.arities[a.pred]}, queried with {a.arity}")
    names: list[Var] = []
    for a in atoms:
        for v in a.vars():
            if not v.name.startswith("_") and v not in names:
                names.append(v)
    budget = _Budget(DEFAULT_MAX_TUPLES, deadline, 0) if deadline is not None else None
    sources = [db.relation(a.pred) for a in atoms]
    seen: set[tuple] = set()
    for env in _join(atoms, sources, [None] * len(atoms), db, None, budget):
        seen.add(tuple(env[v] for v in names))
    rows = sorted(seen, key=lambda row: tuple(sort_key(c) for c in row))
    return [{v.name: c for v, c in zip(names, row)} for row in rows]
