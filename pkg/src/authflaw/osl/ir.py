"""Lowering of OSL ASTs to a labeled three-address IR.

Every value-producing instruction defines exactly one value, and that value is
named by the instruction's label (rendered as a decimal string).  Source
variables are mapped to the label of their current definition while lowering,
so the IR is in SSA form: ``if``/``else`` joins introduce ``phi`` assigns.
Naming values by label lets a query such as ``flowTo(L2, X)`` relate the value
produced at label ``L2`` to the branch condition ``X`` directly.

Constants in operand position are rendered with a leading ``#`` (``#0``,
``#"abc"``, ``#null``) so they never collide with labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from . import ast

KINDS = ("Entry", "Assign", "Const", "Alloc", "FieldLoad", "FieldStore", "Call", "Branch", "Return")
VALUE_KINDS = frozenset({"Assign", "Const", "Alloc", "FieldLoad", "Call"})


def is_literal(ref: str) -> bool:
    return ref.startswith("#")


def literal_value(ref: str) -> object:
    """Decode a ``#``-prefixed literal operand back to a Python value."""
    body = ref[1:]
    if body == "null":
        return None
    if body in ("true", "false"):
        return body == "true"
    if body.startswith('"'):
        import json

        return json.loads(body)
    return float(body) if "." in body else int(body)


@dataclass(frozen=True)
class Instruction:
    label: int
    kind: str
    function: str
    target: Optional[str] = None
    operands: tuple[str, ...] = ()
    operand_names: tuple[str, ...] = ()
    op: Optional[str] = None
    field: Optional[str] = None
    callee: Optional[str] = None
    qualifier: Optional[str] = None
    receiver: Optional[str] = None
    successors: tuple[int, ...] = ()
    parent: int = 0
    index: int = -1
    line: int = 0

    @property
    def ref(self) -> str:
        return str(self.label)

    @property
    def defines_value(self) -> bool:
        return self.kind in VALUE_KINDS

    def uses(self) -> tuple[str, ...]:
        """Value refs read by this instruction (literals excluded)."""
        refs = [r for r in self.operands if not is_literal(r)]
        if self.receiver is not None:
            refs.insert(0, self.receiver)
        return tuple(refs)

    def render(self) -> str:
        ops = ", ".join(self.operands)
        if self.kind == "Entry":
            return f"{self.label}: entry {self.function}"
        if self.kind == "Branch":
            return f"{self.label}: if {ops} goto {self.successors[0]} else {self.successors[1]}"
        if self.kind == "Return":
            return f"{self.label}: return {ops}".rstrip()
        if self.kind == "FieldStore":
            return f"{self.label}: {self.operands[0]}.{self.field} = {self.operands[1]}"
        rhs = {
            "Const": ops,
            "Alloc": f"new {self.callee}({ops})",
            "FieldLoad": f"{ops}.{self.field}",
        }.get(self.kind)
        if self.kind == "Call":
            recv = f"{self.receiver}." if self.receiver else (f"{self.qualifier}." if self.qualifier else "")
            rhs = f"{recv}{self.callee}({ops})"
        elif self.kind == "Assign":
            rhs = f"{self.op}({ops})"
        return f"{self.label}: {self.target} = {rhs}"


@dataclass(frozen=True)
class FunctionIR:
    name: str
    params: tuple[str, ...]
    entry: int
    labels: tuple[int, ...]
    formals: tuple[int, ...]
    path: str = "<input>"


@dataclass(frozen=True)
class IRProgram:
    instructions: tuple[Instruction, ...]
    functions: tuple[FunctionIR, ...]
    _by_label: dict = field(default_factory=dict, repr=False, compare=False)
    _by_name: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._by_label.update({i.label: i for i in self.instructions})
        self._by_name.update({f.name: f for f in self.functions})

    def __getitem__(self, label: int) -> Instruction:
        return self._by_label[label]

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)

    def function(self, name: str) -> FunctionIR:
        return self._by_name[name]

    def has_function(self, name: str) -> bool:
        return name in self._by_name

    @property
    def function_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.functions)

    def in_functions(self, names: Iterable[str]) -> list[Instruction]:
        names = set(names)
        return [i for i in self.instructions if i.function in names]

    def base_facts(self, functions: Optional[Iterable[str]] = None) -> list[tuple[str, tuple[str, ...]]]:
        """Per-instruction facts: assign, alloc, branch plus call/field/arg facts."""
        instrs = self.instructions if functions is None else self.in_functions(functions)
        facts: list[tuple[str, tuple[str, ...]]] = []
        for ins in instrs:
            L = ins.ref
            if ins.kind in ("Assign", "Const"):
                for src in ins.operands:
                    facts.append(("assign", (L, L, src)))
            elif ins.kind == "Alloc":
                facts.append(("alloc", (L, L, f"o{L}")))
            elif ins.kind == "Branch":
                t, f = ins.successors
                facts.append(("branch", (L, ins.operands[0], str(t), str(f))))
            elif ins.kind == "FieldLoad":
                facts.append(("load", (L, ins.operands[0], ins.field)))
            elif ins.kind == "FieldStore":
                facts.append(("store", (L, ins.operands[0], ins.field, ins.operands[1])))
            elif ins.kind == "Call":
                facts.append(("call", (L, ins.callee)))
                for i, a in enumerate(ins.operands):
                    facts.append(("arg", (L, str(i), a)))
        return facts


class _FunctionLowerer:
    def __init__(self, owner: "_Lowerer", fn: ast.Function):
        self.owner = owner
        self.fn = fn
        self.instrs: list[dict] = []
        # hooks awaiting the next emitted instruction: (instr dict, successor slot)
        self.pending: list[tuple[dict, int]] = []
        self.parent = 0

    # emission
    def emit(self, kind: str, line: int = 0, **kw) -> dict:
        label = self.owner.next_label()
        ins = dict(label=label, kind=kind, function=self.fn.name, parent=self.parent, line=line, **kw)
        ins.setdefault("successors", [None, None] if kind == "Branch" else ([] if kind == "Return" else [None]))
        for hook, slot in self.pending:
            hook["successors"][slot] = label
        if kind in ("Branch", "Return"):
            self.pending = []
        else:
            self.pending = [(ins, 0)]
        self.instrs.append(ins)
        return ins

    def temp(self) -> str:
        return self.owner.next_temp()

    # environment: a stack of scopes mapping source names to value refs
    def lookup(self, env: list[dict], name: str) -> Optional[str]:
        for scope in reversed(env):
            if name in scope:
                return scope[name]
        return None

    def bind(self, env: list[dict], name: str, ref: str) -> None:
        for scope in reversed(env):
            if name in scope:
                scope[name] = ref
                return
        env[-1][name] = ref

    # lowering
    def run(self) -> list[dict]:
        entry = self.emit("Entry", self.fn.line)
        self.parent = entry["label"]
        env: list[dict] = [{}]
        for i, p in enumerate(self.fn.params):
            ins = self.emit("Assign", self.fn.line, target=p, op="param", index=i)
            env[0][p] = str(ins["label"])
        self.block(self.fn.body, env)
        if self.pending:
            self.emit("Return", 0)
        return self.instrs

    def block(self, stmts: Iterable[ast.Stmt], env: list[dict]) -> None:
        env.append({})
        for stmt in stmts:
            self.statement(stmt, env)
        env.pop()

    def statement(self, stmt: ast.Stmt, env: list[dict]) -> None:
        if isinstance(stmt, ast.Let):
            ref, _ = self.define(stmt.value, env, stmt.name, stmt.line)
            env[-1][stmt.name] = ref
        elif isinstance(stmt, ast.Assign):
            if isinstance(stmt.target, ast.Name):
                ref, _ = self.define(stmt.value, env, stmt.target.ident, stmt.line)
                self.bind(env, stmt.target.ident, ref)
            else:
                obj, obj_name = self.expr(stmt.target.obj, env, None, stmt.line)
                val, val_name = self.expr(stmt.value, env, None, stmt.line)
                self.emit(
                    "FieldStore",
                    stmt.line,
                    operands=(obj, val),
                    operand_names=(obj_name, val_name),
                    field=stmt.target.field,
                )
        elif isinstance(stmt, ast.If):
            self.branch(stmt, env)
        elif isinstance(stmt, ast.Return):
            if stmt.value is None:
                self.emit("Return", stmt.line)
            else:
                ref, name = self.expr(stmt.value, env, None, stmt.line)
                self.emit("Return", stmt.line, operands=(ref,), operand_names=(name,))
        else:
            e = stmt.expr
            if isinstance(e, (ast.Name, ast.Literal)):
                self.define(e, env, self.temp(), stmt.line)
            else:
                self.expr(e, env, None, stmt.line)

    def define(self, value: ast.Expr, env: list[dict], name: str, line: int) -> tuple[str, str]:
        """Lower ``name = value`` so that the defining instruction carries ``name``."""
        if isinstance(value, ast.Literal):
            ins = self.emit("Const", line, target=name, operands=("#" + value.render(),), operand_names=("",))
            return str(ins["label"]), name
        if isinstance(value, ast.Name):
            src, src_name = self.expr(value, env, None, line)
            ins = self.emit("Assign", line, target=name, op="copy", operands=(src,), operand_names=(src_name,))
            return str(ins["label"]), name
        return self.expr(value, env, name, line)

    def branch(self, stmt: ast.If, env: list[dict]) -> None:
        cond, cond_name = self.expr(stmt.cond, env, None, stmt.line)
        outer_parent = self.parent
        br = self.emit("Branch", stmt.line, operands=(cond,), operand_names=(cond_name,))
        self.parent = br["label"]

        before = [dict(s) for s in env]
        self.pending = [(br, 0)]
        then_env = [dict(s) for s in before]
        self.block(stmt.then, then_env)
        then_pending = self.pending

        self.pending = [(br, 1)]
        else_env = [dict(s) for s in before]
        self.block(stmt.orelse, else_env)
        else_pending = self.pending

        self.parent = outer_parent
        self.pending = then_pending + else_pending
        live = [e for e, p in ((then_env, then_pending), (else_env, else_pending)) if p]
        if len(live) == 1:
            env[:] = live[0]
        elif len(live) == 2:
            merged = [dict(s) for s in then_env]
            for depth, scope in enumerate(before):
                for name in scope:
                    a, b = then_env[depth][name], else_env[depth][name]
                    if a != b:
                        phi = self.emit("Assign", stmt.line, target=name, op="phi", operands=(a, b), operand_names=(name, name))
                        merged[depth][name] = str(phi["label"])
            env[:] = merged

    def expr(self, e: ast.Expr, env: list[dict], target: Optional[str], line: int) -> tuple[str, str]:
        """Lower an expression; returns (value ref, display name)."""
        line = getattr(e, "line", 0) or line
        if isinstance(e, ast.Literal):
            return "#" + e.render(), e.render()
        if isinstance(e, ast.Name):
            ref = self.lookup(env, e.ident)
            if ref is None:
                # function or builtin used as a value
                return "#" + e.ident, e.ident
            return ref, e.ident
        def fresh() -> str:
            # named after operands are lowered so temporaries follow label order
            return target or self.temp()

        if isinstance(e, ast.FieldAccess):
            obj, obj_name = self.expr(e.obj, env, None, line)
            ins = self.emit("FieldLoad", line, target=fresh(), operands=(obj,), operand_names=(obj_name,), field=e.field)
        elif isinstance(e, ast.Call):
            qualifier = receiver = None
            if e.receiver is not None:
                if isinstance(e.receiver, ast.Name):
                    qualifier = e.receiver.ident
                    receiver = self.lookup(env, qualifier)
                else:
                    receiver, _ = self.expr(e.receiver, env, None, line)
            args = [self.expr(a, env, None, line) for a in e.args]
            ins = self.emit(
                "Call",
                line,
                target=fresh(),
                operands=tuple(a for a, _ in args),
                operand_names=tuple(n for _, n in args),
                callee=e.name,
                qualifier=qualifier,
                receiver=receiver,
            )
        elif isinstance(e, ast.New):
            args = [self.expr(a, env, None, line) for a in e.args]
            ins = self.emit(
                "Alloc",
                line,
                target=fresh(),
                operands=tuple(a for a, _ in args),
                operand_names=tuple(n for _, n in args),
                callee=e.cls,
            )
        elif isinstance(e, ast.BinOp):
            left, lname = self.expr(e.left, env, None, line)
            right, rname = self.expr(e.right, env, None, line)
            ins = self.emit("Assign", line, target=fresh(), op=e.op, operands=(left, right), operand_names=(lname, rname))
        elif isinstance(e, ast.Not):
            inner, iname = self.expr(e.operand, env, None, line)
            ins = self.emit("Assign", line, target=fresh(), op="!", operands=(inner,), operand_names=(iname,))
        else:  # pragma: no cover - exhaustive over Expr
            raise TypeError(f"unknown expression {e!r}")
        return str(ins["label"]), ins["target"]


class _Lowerer:
    def __init__(self) -> None:
        self.label = 0
        self.temps = 0

    def next_label(self) -> int:
        self.label += 1
        return self.label

    def next_temp(self) -> str:
        self.temps += 1
        return f"%t{self.temps}"


def lower_to_ir(program: ast.Program) -> IRProgram:
    lowerer = _Lowerer()
    instructions: list[Instruction] = []
    functions: list[FunctionIR] = []
    for fn in program.functions:
        raw = _FunctionLowerer(lowerer, fn).run()
        instrs = []
        for d in raw:
            d = dict(d)
            d["successors"] = tuple(s for s in d["successors"] if s is not None)
            instrs.append(Instruction(**d))
        instructions.extend(instrs)
        formals = tuple(i.label for i in instrs if i.kind == "Assign" and i.op == "param")
        functions.append(FunctionIR(fn.name, fn.params, instrs[0].label, tuple(i.label for i in instrs), formals, fn.path))
    return IRProgram(tuple(instructions), tuple(functions))
