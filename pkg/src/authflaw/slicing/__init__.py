"""Callgraph construction and automata-based endpoint slicing."""

from .automata import (
    EPS,
    Automaton,
    callgraph_to_automaton,
    extract_subcallgraph,
    intersect,
    query_to_nfa,
    remove_epsilon,
)
from .callgraph import ROOT, CallEdge, Callgraph, build_callgraph, resolve_callee
from .query import (
    WILDCARD,
    Alt,
    Dot,
    Lit,
    QuerySyntaxError,
    Seq,
    Star,
    UnknownMethodError,
    parse_endpoint_query,
)


def slice_functions(cg: Callgraph, query_text: str, strict: bool = False) -> set[str]:
    """Declared functions on a callgraph path (from the virtual root) matching the query."""
    rooted = cg.with_root()
    q = parse_endpoint_query(query_text, cg.nodes, strict=strict)
    product = intersect(callgraph_to_automaton(rooted, {ROOT}), query_to_nfa(q))
    return extract_subcallgraph(product, rooted) & set(cg.functions)


__all__ = [
    "EPS",
    "ROOT",
    "WILDCARD",
    "Alt",
    "Automaton",
    "CallEdge",
    "Callgraph",
    "Dot",
    "Lit",
    "QuerySyntaxError",
    "Seq",
    "Star",
    "UnknownMethodError",
    "build_callgraph",
    "callgraph_to_automaton",
    "extract_subcallgraph",
    "intersect",
    "parse_endpoint_query",
    "query_to_nfa",
    "remove_epsilon",
    "resolve_callee",
    "slice_functions",
]
