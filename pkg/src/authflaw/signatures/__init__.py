"""Property signatures: graphs, compilation, checking and a brute-force oracle."""

from .bruteforce import MAX_SIGNATURE_NODES, SignatureTooLarge, TypedGraph, check_embedding_bruteforce
from .check import (
    ERROR,
    NOT_APPLICABLE,
    OUTCOMES,
    SATISFIED,
    VIOLATION,
    Verdict,
    check_property,
    find_embeddings,
)
from .compile import CompiledSignature, compile_signature, graph_body
from .graph import (
    BranchEdge,
    Forbidden,
    PropertySignature,
    SignatureError,
    SignatureGraph,
    SigNode,
    graph_from_body,
    signature_from_rules,
)
from .loader import load_properties, load_property, parse_property, select_properties

__all__ = [
    "ERROR",
    "MAX_SIGNATURE_NODES",
    "NOT_APPLICABLE",
    "OUTCOMES",
    "SATISFIED",
    "VIOLATION",
    "BranchEdge",
    "CompiledSignature",
    "Forbidden",
    "PropertySignature",
    "SigNode",
    "SignatureError",
    "SignatureGraph",
    "SignatureTooLarge",
    "TypedGraph",
    "Verdict",
    "check_embedding_bruteforce",
    "check_property",
    "compile_signature",
    "find_embeddings",
    "graph_body",
    "graph_from_body",
    "load_properties",
    "load_property",
    "parse_property",
    "select_properties",
    "signature_from_rules",
]
