"""Endpoint queries: regular expressions over method names.

    Q := name | . | Q -> Q | Q + Q | Q* | Q+ | (Q)

A name is a run of ``[A-Za-z0-9_:$]`` segments joined by dots (``A:foo``,
``db.store``) or a double-quoted string.  A lone ``.`` matches any method.
``+`` is postfix when the next token cannot start an operand, otherwise it is
binary disjunction.  ``Q+`` desugars to ``Q -> Q*``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Union

log = logging.getLogger(__name__)

WILDCARD = "."


class QuerySyntaxError(ValueError):
    pass


class UnknownMethodError(ValueError):
    pass


@dataclass(frozen=True)
class Lit:
    name: str

    def __str__(self) -> str:
        return self.name if re.fullmatch(r"[\w:$]+(?:\.[\w:$]+)*", self.name) else f'"{self.name}"'


@dataclass(frozen=True)
class Dot:
    def __str__(self) -> str:
        return "."


@dataclass(frozen=True)
class Seq:
    left: "Query"
    right: "Query"

    def __str__(self) -> str:
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Alt:
    left: "Query"
    right: "Query"

    def __str__(self) -> str:
        return f"({self.left} + {self.right})"


@dataclass(frozen=True)
class Star:
    inner: "Query"

    def __str__(self) -> str:
        return f"({self.inner})*"


Query = Union[Lit, Dot, Seq, Alt, Star]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->|→)
  | (?P<name>[\w:$]+(?:\.[\w:$]+)*)
  | (?P<quoted>"[^"]*")
  | (?P<op>[.+*()∗])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r} at offset {pos}")
        kind = m.lastgroup
        if kind == "quoted":
            toks.append(("name", m.group()[1:-1], pos))
        elif kind == "arrow":
            toks.append(("op", "->", pos))
        elif kind == "op":
            toks.append(("op", "*" if m.group() == "∗" else m.group(), pos))
        elif kind == "name":
            toks.append(("name", m.group(), pos))
        pos = m.end()
    toks.append(("eof", "", pos))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self, k: int = 0) -> tuple[str, str, int]:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def at(self, text: str, k: int = 0) -> bool:
        kind, t, _ = self.peek(k)
        return kind == "op" and t == text

    def starts_operand(self, k: int = 0) -> bool:
        kind, t, _ = self.peek(k)
        return kind == "name" or (kind == "op" and t in (".", "("))

    def error(self, msg: str) -> QuerySyntaxError:
        _, t, pos = self.peek()
        return QuerySyntaxError(f"{msg} at offset {pos} (found {t or 'end of input'!r})")

    def alt(self) -> Query:
        q = self.seq()
        while self.at("+"):
            self.pos += 1
            q = Alt(q, self.seq())
        return q

    def seq(self) -> Query:
        q = self.postfix()
        while self.at("->"):
            self.pos += 1
            q = Seq(q, self.postfix())
        return q

    def postfix(self) -> Query:
        q = self.atom()
        while True:
            if self.at("*"):
                self.pos += 1
                q = Star(q)
            elif self.at("+") and not self.starts_operand(1):
                self.pos += 1
                q = Seq(q, Star(q))
            else:
                return q

    def atom(self) -> Query:
        kind, t, _ = self.peek()
        if kind == "name":
            self.pos += 1
            return Lit(t)
        if self.at("."):
            self.pos += 1
            return Dot()
        if self.at("("):
            self.pos += 1
            q = self.alt()
            if not self.at(")"):
                raise self.error("expected ')'")
            self.pos += 1
            return q
        raise self.error("expected a method name, '.' or '('")


def literals(q: Query) -> list[str]:
    if isinstance(q, Lit):
        return [q.name]
    if isinstance(q, Dot):
        return []
    if isinstance(q, Star):
        return literals(q.inner)
    return literals(q.left) + literals(q.right)


def parse_endpoint_query(text: str, methods: Optional[Iterable[str]] = None, strict: bool = True) -> Query:
    """Parse ``text``; with ``methods`` given, check every literal against it.

    Unknown literals raise :class:`UnknownMethodError` when ``strict`` and are
    logged otherwise (they become dead transitions).
    """
    p = _Parser(text)
    if p.peek()[0] == "eof":
        raise QuerySyntaxError("empty endpoint query")
    q = p.alt()
    if p.peek()[0] != "eof":
        raise p.error("unexpected trailing input")
    if methods is not None:
        known = set(methods)
        unknown = sorted({n for n in literals(q) if n not in known})
        if unknown:
            if strict:
                raise UnknownMethodError(f"unknown method(s) in endpoint query: {', '.join(unknown)}")
            log.info("endpoint query mentions unknown method(s): %s", ", ".join(unknown))
    return q


def to_python_regex(q: Query, alphabet: dict[str, str]) -> str:
    """Translate to a Python regex over one character per symbol (test helper)."""
    if isinstance(q, Lit):
        ch = alphabet.get(q.name)
        return re.escape(ch) if ch is not None else "(?!)"
    if isinstance(q, Dot):
        return "[" + "".join(re.escape(c) for c in sorted(alphabet.values())) + "]" if alphabet else "(?!)"
    if isinstance(q, Star):
        return f"(?:{to_python_regex(q.inner, alphabet)})*"
    if isinstance(q, Seq):
        return f"(?:{to_python_regex(q.left, alphabet)}{to_python_regex(q.right, alphabet)})"
    return f"(?:{to_python_regex(q.left, alphabet)}|{to_python_regex(q.right, alphabet)})"
