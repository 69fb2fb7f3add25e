from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from authflaw.datalog import FactDB
from authflaw.pipeline import load_program_files
from authflaw.signatures import (
    SignatureError,
    SignatureTooLarge,
    check_embedding_bruteforce,
    check_property,
    compile_signature,
    find_embeddings,
    load_properties,
    parse_property,
    select_properties,
)
from authflaw.signatures.bruteforce import TypedGraph

from oracles import CORPUS, random_signature_text, random_typed_facts


def sig(body, pid="S", mode="presence"):
    return parse_property(f"// id: {pid}\n// mode: {mode}\n{body}")


def db_of(**rels):
    db = FactDB()
    for p, k in (("label", 1), ("OAuthTag", 2), ("flowTo", 2), ("followBy", 2), ("branch", 4)):
        db.declare(p, k)
    for p, ts in rels.items():
        for t in ts:
            db.add_tuple(p, tuple(str(x) for x in t))
    return db


def test_bundled_properties_load_in_order(properties):
    assert [p.id for p in properties] == [f"P{i}" for i in range(1, 11)]
    for p in properties:
        assert p.endpoint_query
        compile_signature(p)


def test_p1_compiles_to_the_five_line_shape(properties):
    p1 = properties[0]
    (rule,) = compile_signature(p1).rules
    atoms = {str(a) for a in rule.body}
    for expected in (
        'OAuthTag(L1, "auth_req")', 'OAuthTag(L2, "req_URI")', 'OAuthTag(L3, "client_URI")',
        'OAuthTag(L4, "redirect")', 'OAuthTag(L5, "error")', "branch(L6, X, L4, L5)",
        "flowTo(L2, X)", "flowTo(L3, X)", "followBy(L1, L2)", "followBy(L1, L3)",
    ):
        assert expected in atoms
    # one-to-one: every pair of the seven nodes is distinct
    assert sum(1 for a in rule.body if a.is_builtin) == 21


def test_single_node_signature():
    s = sig("S :- OAuthTag(L1, code).")
    (rule,) = compile_signature(s).rules
    assert [str(a) for a in rule.body] == ['OAuthTag(L1, "code")']


def test_two_nodes_with_data_edge():
    s = sig("S :- OAuthTag(L1, code), OAuthTag(L2, db_read), flowTo(L1, L2).")
    (rule,) = compile_signature(s).rules
    assert {str(a) for a in rule.body} == {
        'OAuthTag(L1, "code")', 'OAuthTag(L2, "db_read")', "flowTo(L1, L2)", "L1 != L2",
    }


def test_unknown_node_type_rejected():
    with pytest.raises(SignatureError):
        sig("S :- mystery(L1).")


def test_select_properties(properties):
    assert [p.id for p in select_properties(properties, "P3,P1")] == ["P1", "P3"]
    with pytest.raises(SignatureError):
        select_properties(properties, "P99")


def test_bruteforce_two_tagged_nodes():
    s = sig("S :- OAuthTag(L1, code).")
    db = db_of(label=[(1,), (2,)], OAuthTag=[(1, "code"), (2, "code")])
    assert len(check_embedding_bruteforce(s.disjuncts[0], db)) == 2


def test_bruteforce_missing_edge():
    s = sig("S :- OAuthTag(L1, code), OAuthTag(L2, db_read), flowTo(L1, L2).")
    db = db_of(label=[(1,), (2,)], OAuthTag=[(1, "code"), (2, "db_read")])
    assert check_embedding_bruteforce(s.disjuncts[0], db) == []


def test_bruteforce_size_cap():
    body = ", ".join(f"label(L{i})" for i in range(11))
    s = sig(f"S :- {body}.")
    with pytest.raises(SignatureTooLarge):
        check_embedding_bruteforce(s.disjuncts[0], db_of(label=[(1,)]))


def test_absence_mode_and_least_witness():
    s = sig("S :- OAuthTag(L1, code).", mode="absence")
    v = check_property(db_of(label=[(3,), (2,)], OAuthTag=[(3, "code"), (2, "code")]), s)
    assert v.outcome == "violation" and v.witness == {"L1": 2}
    assert check_property(db_of(label=[(1,)]), s).outcome == "satisfied"


def compare(s, db):
    expected = check_embedding_bruteforce(s.disjuncts[0], db)
    got = sorted((b for _, b in find_embeddings(db, s)), key=lambda m: tuple(m.values()))
    assert got == expected
    return expected


@settings(max_examples=120, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_compiled_query_matches_bruteforce(seed):
    rng = random.Random(seed)
    s = parse_property(random_signature_text(rng), "random")
    db = random_typed_facts(rng, rng.randint(1, 12))
    compare(s, db)


def replay(s, witness, db):
    g = s.disjuncts[0]
    tg = TypedGraph.from_facts(db)
    m = {k: str(v) for k, v in witness.items()}
    assert len(set(m.values())) == len(m)  # one-to-one
    for n in g.nodes:
        assert n.types <= tg.tags.get(m[n.var], set())  # type preserving
    for x, y in g.control:
        assert (m[x], m[y]) in tg.follow  # edge preserving
    for x, y in g.data:
        assert (m[x], m[y]) in tg.flow


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.osl")), ids=lambda p: p.stem)
def test_corpus_oracle_and_witnesses(path, analyzer, properties):
    prog = load_program_files([path], analyzer.config)
    scope = analyzer.analyze_scope(prog, prog.functions)
    for p in properties:
        for i, g in enumerate(p.disjuncts):
            single = type(p)(p.id, (g,), mode=p.mode)
            found = compare(single, scope.facts)
            v = check_property(scope.facts, single)
            if found:
                replay(single, v.witness, scope.facts)
