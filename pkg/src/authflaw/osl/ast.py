"""AST node types for OSL programs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Name:
    ident: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Literal:
    # kind is one of "string", "number", "null", "bool"
    kind: str
    value: object
    line: int = 0
    col: int = 0

    def render(self) -> str:
        if self.kind == "string":
            return '"' + str(self.value).replace("\\", "\\\\").replace('"', '\\"') + '"'
        if self.kind == "null":
            return "null"
        if self.kind == "bool":
            return "true" if self.value else "false"
        return str(self.value)


@dataclass(frozen=True)
class FieldAccess:
    obj: "Expr"
    field: str
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Call:
    """``name(args)`` or ``receiver.name(args)``."""

    name: str
    args: tuple["Expr", ...]
    receiver: Optional["Expr"] = None
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple["Expr", ...]
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    line: int = 0
    col: int = 0


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    line: int = 0
    col: int = 0


Expr = Union[Name, Literal, FieldAccess, Call, New, BinOp, Not]


@dataclass(frozen=True)
class Let:
    name: str
    value: Expr
    line: int = 0


@dataclass(frozen=True)
class Assign:
    target: Union[Name, FieldAccess]
    value: Expr
    line: int = 0


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()
    line: int = 0


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None
    line: int = 0


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr
    line: int = 0


Stmt = Union[Let, Assign, If, Return, ExprStmt]


@dataclass(frozen=True)
class Function:
    name: str
    params: tuple[str, ...]
    body: tuple[Stmt, ...]
    path: str = "<input>"
    line: int = 0


@dataclass(frozen=True)
class Program:
    functions: tuple[Function, ...] = ()
    files: tuple[str, ...] = field(default=())

    def function(self, name: str) -> Function:
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)

    @property
    def function_names(self) -> tuple[str, ...]:
        return tuple(fn.name for fn in self.functions)
