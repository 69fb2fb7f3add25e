"""Tokenizer and recursive-descent parser for OSL.

OSL is a small JS-like language: functions, ``let``, field load/store,
``new``, calls, ``if``/``else``, ``return`` and the operators
``== != && || ! +``.  Loops are intentionally absent.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import ast

KEYWORDS = {"fn", "let", "if", "else", "return", "new", "null", "true", "false"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>==|!=|&&|\|\||[(){},;.=!+])
    """,
    re.VERBOSE,
)


class OSLSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int, path: str = "<input>"):
        super().__init__(f"{path}:{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col
        self.path = path


class OSLSemanticError(Exception):
    def __init__(self, message: str, line: int = 0, path: str = "<input>"):
        super().__init__(f"{path}:{line}: {message}")
        self.message = message
        self.line = line
        self.path = path


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, string, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str, path: str = "<input>") -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise OSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1, path)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, line, col))
        elif kind in ("number", "string", "op"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


def _unquote(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), body)


# binary operator precedence, lowest first
_PRECEDENCE = [("||",), ("&&",), ("==", "!="), ("+",)]


class _Parser:
    def __init__(self, tokens: list[Token], path: str):
        self.tokens = tokens
        self.pos = 0
        self.path = path

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "keyword") and self.tok.text == text

    def error(self, message: str, tok: Optional[Token] = None) -> OSLSyntaxError:
        tok = tok or self.tok
        return OSLSyntaxError(message, tok.line, tok.col, self.path)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected identifier, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    # grammar
    def program(self) -> list[ast.Function]:
        functions = []
        while self.tok.kind != "eof":
            functions.append(self.function())
        return functions

    def function(self) -> ast.Function:
        start = self.expect("fn")
        name = self.expect_ident().text
        self.expect("(")
        params: list[str] = []
        if not self.at(")"):
            params.append(self.expect_ident().text)
            while self.at(","):
                self.pos += 1
                params.append(self.expect_ident().text)
        self.expect(")")
        body = self.block()
        return ast.Function(name, tuple(params), body, self.path, start.line)

    def block(self) -> tuple[ast.Stmt, ...]:
        self.expect("{")
        stmts = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def statement(self) -> ast.Stmt:
        tok = self.tok
        if self.at("let"):
            self.pos += 1
            name = self.expect_ident().text
            self.expect("=")
            value = self.expression()
            self.expect(";")
            return ast.Let(name, value, tok.line)
        if self.at("if"):
            self.pos += 1
            self.expect("(")
            cond = self.expression()
            self.expect(")")
            then = self.block()
            orelse: tuple[ast.Stmt, ...] = ()
            if self.at("else"):
                self.pos += 1
                orelse = self.block()
            return ast.If(cond, then, orelse, tok.line)
        if self.at("return"):
            self.pos += 1
            value = None
            if not self.at(";"):
                value = self.expression()
            self.expect(";")
            return ast.Return(value, tok.line)
        expr = self.expression()
        if self.at("="):
            eq = self.tok
            self.pos += 1
            if not isinstance(expr, (ast.Name, ast.FieldAccess)):
                raise self.error("invalid assignment target", eq)
            value = self.expression()
            self.expect(";")
            return ast.Assign(expr, value, tok.line)
        self.expect(";")
        return ast.ExprStmt(expr, tok.line)

    def expression(self, level: int = 0) -> ast.Expr:
        if level == len(_PRECEDENCE):
            return self.unary()
        left = self.expression(level + 1)
        while self.tok.kind == "op" and self.tok.text in _PRECEDENCE[level]:
            op = self.tok
            self.pos += 1
            right = self.expression(level + 1)
            left = ast.BinOp(op.text, left, right, op.line, op.col)
        return left

    def unary(self) -> ast.Expr:
        if self.at("!"):
            tok = self.tok
            self.pos += 1
            return ast.Not(self.unary(), tok.line, tok.col)
        return self.postfix()

    def arguments(self) -> tuple[ast.Expr, ...]:
        self.expect("(")
        args = []
        if not self.at(")"):
            args.append(self.expression())
            while self.at(","):
                self.pos += 1
                args.append(self.expression())
        self.expect(")")
        return tuple(args)

    def postfix(self) -> ast.Expr:
        expr = self.primary()
        while True:
            if self.at("."):
                self.pos += 1
                name = self.expect_ident()
                if self.at("("):
                    args = self.arguments()
                    expr = ast.Call(name.text, args, expr, name.line, name.col)
                else:
                    expr = ast.FieldAccess(expr, name.text, name.line, name.col)
            elif self.at("(") and isinstance(expr, ast.Name):
                args = self.arguments()
                expr = ast.Call(expr.ident, args, None, expr.line, expr.col)
            else:
                return expr

    def primary(self) -> ast.Expr:
        tok = self.tok
        if tok.kind == "ident":
            self.pos += 1
            return ast.Name(tok.text, tok.line, tok.col)
        if tok.kind == "number":
            self.pos += 1
            value = float(tok.text) if "." in tok.text else int(tok.text)
            return ast.Literal("number", value, tok.line, tok.col)
        if tok.kind == "string":
            self.pos += 1
            return ast.Literal("string", _unquote(tok.text), tok.line, tok.col)
        if tok.kind == "keyword":
            if tok.text == "null":
                self.pos += 1
                return ast.Literal("null", None, tok.line, tok.col)
            if tok.text in ("true", "false"):
                self.pos += 1
                return ast.Literal("bool", tok.text == "true", tok.line, tok.col)
            if tok.text == "new":
                self.pos += 1
                cls = self.expect_ident()
                return ast.New(cls.text, self.arguments(), tok.line, tok.col)
        if self.at("("):
            self.pos += 1
            inner = self.expression()
            self.expect(")")
            return inner
        found = tok.text or "end of input"
        raise self.error(f"expected expression, found {found!r}")


class _Resolver:
    """Checks that every identifier is declared before use."""

    def __init__(self, functions: set[str], builtins: Optional[set[str]], path: str):
        self.functions = functions
        self.builtins = builtins
        self.path = path

    def function(self, fn: ast.Function) -> None:
        seen = set()
        for p in fn.params:
            if p in seen:
                raise OSLSemanticError(f"duplicate parameter {p!r} in {fn.name}", fn.line, fn.path)
            seen.add(p)
        self.block(fn.body, [set(fn.params)], fn.path)

    def block(self, stmts: Iterable[ast.Stmt], scopes: list[set[str]], path: str) -> None:
        scopes = scopes + [set()]
        for stmt in stmts:
            if isinstance(stmt, ast.Let):
                self.expr(stmt.value, scopes, path)
                scopes[-1].add(stmt.name)
            elif isinstance(stmt, ast.Assign):
                self.expr(stmt.value, scopes, path)
                self.expr(stmt.target, scopes, path)
            elif isinstance(stmt, ast.If):
                self.expr(stmt.cond, scopes, path)
                self.block(stmt.then, scopes, path)
                self.block(stmt.orelse, scopes, path)
            elif isinstance(stmt, ast.Return):
                if stmt.value is not None:
                    self.expr(stmt.value, scopes, path)
            else:
                self.expr(stmt.expr, scopes, path)

    def declared(self, name: str, scopes: list[set[str]]) -> bool:
        return any(name in s for s in scopes)

    def expr(self, e: ast.Expr, scopes: list[set[str]], path: str) -> None:
        if isinstance(e, ast.Name):
            if not self.declared(e.ident, scopes) and e.ident not in self.functions:
                if self.builtins is None or e.ident not in self.builtins:
                    raise OSLSemanticError(f"use of undeclared identifier {e.ident!r}", e.line, path)
        elif isinstance(e, ast.FieldAccess):
            self.expr(e.obj, scopes, path)
        elif isinstance(e, ast.Call):
            for a in e.args:
                self.expr(a, scopes, path)
            if e.receiver is None:
                if self.builtins is not None and e.name not in self.functions and e.name not in self.builtins:
                    raise OSLSemanticError(f"call to undeclared function {e.name!r}", e.line, path)
            elif isinstance(e.receiver, ast.Name) and not self.declared(e.receiver.ident, scopes):
                # ``db.store(x)`` style: the receiver is a namespace, not a variable
                qualified = f"{e.receiver.ident}.{e.name}"
                if self.builtins is not None and qualified not in self.builtins:
                    raise OSLSemanticError(
                        f"use of undeclared identifier {e.receiver.ident!r}", e.receiver.line, path
                    )
            else:
                self.expr(e.receiver, scopes, path)
        elif isinstance(e, ast.New):
            for a in e.args:
                self.expr(a, scopes, path)
        elif isinstance(e, ast.BinOp):
            self.expr(e.left, scopes, path)
            self.expr(e.right, scopes, path)
        elif isinstance(e, ast.Not):
            self.expr(e.operand, scopes, path)


def parse_program(
    source: str,
    path: str = "<input>",
    builtins: Optional[Iterable[str]] = None,
) -> ast.Program:
    """Parse a single OSL source text.

    ``builtins`` enables checking of call targets; when it is ``None`` only
    variable names are checked and unresolved callees are left for the
    callgraph builder to report.
    """
    return parse_files([(path, source)], builtins=builtins)


def parse_files(
    files: Iterable[tuple[str, str]],
    builtins: Optional[Iterable[str]] = None,
) -> ast.Program:
    functions: list[ast.Function] = []
    paths = []
    for path, text in files:
        paths.append(path)
        functions.extend(_Parser(tokenize(text, path), path).program())

    names: dict[str, ast.Function] = {}
    for fn in functions:
        if fn.name in names:
            raise OSLSemanticError(f"duplicate function name {fn.name!r}", fn.line, fn.path)
        names[fn.name] = fn

    resolver = _Resolver(set(names), set(builtins) if builtins is not None else None, "")
    for fn in functions:
        resolver.function(fn)
    return ast.Program(tuple(functions), tuple(paths))
