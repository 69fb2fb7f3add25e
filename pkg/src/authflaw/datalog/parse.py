"""Text syntax for facts, rules and queries.

    ancestor(X, Y) :- parent(X, Z), ancestor(Z, Y).
    parent("Bill", "Mary").
    p(X) :- q(X), !r(X), X != "a".

Identifiers starting with an uppercase letter or ``_`` are variables; ``_``
alone is a don't-care.  Lowercase identifiers, numbers and double-quoted
strings are constants.  ``¬`` is accepted for ``!``.  ``//`` and ``%`` start
line comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .core import Atom, DatalogError, Rule, Var, neq

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>(?://|%)[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:-|!=|[(),.!¬])
    """,
    re.VERBOSE,
)


class DatalogSyntaxError(DatalogError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    out: list[_Tok] = []
    pos, line, start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DatalogSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            out.append(_Tok(kind, m.group(), line, pos - start + 1))
        for k, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                start = pos + k + 1
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.pos]

    def error(self, msg: str) -> DatalogSyntaxError:
        return DatalogSyntaxError(msg, self.tok.line, self.tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")

    def term(self):
        tok = self.tok
        if tok.kind == "ident":
            self.pos += 1
            if tok.text[0].isupper() or tok.text[0] == "_":
                return Var(tok.text)
            return tok.text
        if tok.kind == "string":
            self.pos += 1
            return re.sub(r"\\(.)", r"\1", tok.text[1:-1])
        if tok.kind == "number":
            self.pos += 1
            return tok.text
        raise self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    def literal(self) -> Atom:
        negated = False
        if self.accept("!") or self.accept("¬"):
            negated = True
        tok = self.tok
        if tok.kind == "ident" and not negated and self.toks[self.pos + 1].text == "!=":
            left = self.term()
            self.expect("!=")
            return neq(left, self.term())
        if tok.kind in ("string", "number") or (tok.kind == "ident" and (tok.text[0].isupper() or tok.text[0] == "_")):
            if self.toks[self.pos + 1].text == "!=" and not negated:
                left = self.term()
                self.expect("!=")
                return neq(left, self.term())
        return self.atom(negated)

    def atom(self, negated: bool = False) -> Atom:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error(f"expected predicate name, found {tok.text or 'end of input'!r}")
        self.pos += 1
        args = []
        if self.accept("("):
            if not self.accept(")"):
                args.append(self.term())
                while self.accept(","):
                    args.append(self.term())
                self.expect(")")
        return Atom(tok.text, args, negated)

    def body(self) -> list[Atom]:
        atoms = [self.literal()]
        while self.accept(","):
            atoms.append(self.literal())
        return atoms

    def clause(self) -> tuple[Atom, list[Atom]]:
        head = self.atom()
        body: list[Atom] = []
        if self.accept(":-"):
            body = self.body()
        # trailing comma before the final period is tolerated
        self.accept(",")
        self.expect(".")
        return head, body


def parse_program(text: str) -> tuple[list[Atom], list[Rule]]:
    """Parse a sequence of facts and rules."""
    p = _Parser(text)
    facts: list[Atom] = []
    rules: list[Rule] = []
    while p.tok.kind != "eof":
        line = p.tok.line
        head, body = p.clause()
        if body:
            try:
                rules.append(Rule(head, body))
            except DatalogError as exc:
                raise DatalogSyntaxError(str(exc), line, 1) from None
        elif head.ground:
            facts.append(head)
        else:
            raise DatalogSyntaxError(f"fact {head} is not ground", line, 1)
    return facts, rules


def parse_rules(text: str) -> list[Rule]:
    facts, rules = parse_program(text)
    return rules + [Rule(f, ()) for f in facts]


def parse_rule(text: str) -> Rule:
    rules = parse_rules(text)
    if len(rules) != 1:
        raise DatalogError(f"expected one rule, found {len(rules)}")
    return rules[0]


def parse_atom(text: str) -> Atom:
    p = _Parser(text)
    atom = p.literal()
    p.accept(".")
    if p.tok.kind != "eof":
        raise p.error("trailing input")
    return atom


def parse_query(text: str) -> list[Atom]:
    p = _Parser(text)
    atoms = p.body()
    p.accept(".")
    if p.tok.kind != "eof":
        raise p.error("trailing input")
    return atoms
