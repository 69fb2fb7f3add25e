from __future__ import annotations

import pytest

from authflaw.pipeline import load_program_files
from authflaw.sdg import (
    ScopeError,
    TagConfig,
    TagConfigError,
    build_sdg,
    compute_oauth_tags,
    compute_points_to,
    derive_dependence_facts,
)

from oracles import CORPUS, flow_closure, follow_closure


def full_scope(prog):
    return build_sdg(prog.ir, prog.cfg, prog.cg, prog.functions)


def closures_of(sdg):
    assign = {(x, y) for _, y, x in sdg.facts_of("assign")}
    alloc = {(x, y) for _, y, x in sdg.facts_of("alloc")}
    alias = set(sdg.facts_of("alias"))
    follow = set(sdg.facts_of("follow"))
    return flow_closure(assign, alloc, alias), follow_closure(follow)


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.osl")), ids=lambda p: p.stem)
def test_dependence_facts_match_closure(path, config):
    prog = load_program_files([path], config)
    sdg = full_scope(prog)
    derived = derive_dependence_facts(sdg)
    flow, follow = closures_of(sdg)
    assert derived.facts("flowTo") == flow
    assert derived.facts("followBy") == follow


def test_sdg_counts_and_edges(config):
    prog = load_program_files([CORPUS / "p1_vulnerable.osl"], config)
    sdg = full_scope(prog)
    assert sdg.node_count == len(list(prog.ir))
    assert sdg.edge_count == len(sdg.X) + len(sdg.Y)
    assert all(e.src in sdg.V and e.dst in sdg.V for e in sdg.X)
    # every data edge carries the value that moves along it
    assert all(e.d for e in sdg.Y)


def test_scope_errors(config):
    prog = load_program_files([CORPUS / "p1_fixed.osl"], config)
    with pytest.raises(ScopeError):
        build_sdg(prog.ir, prog.cfg, prog.cg, [])
    with pytest.raises(ScopeError):
        build_sdg(prog.ir, prog.cfg, prog.cg, ["Nope"])


def test_interprocedural_flow_through_helper(config):
    prog = load_program_files([CORPUS / "p1_helper_fixed.osl"], config)
    sdg = full_scope(prog)
    derived = derive_dependence_facts(sdg)
    ir = prog.ir
    load = next(i for i in ir if i.kind == "FieldLoad" and i.field == "redirect_uri" and i.function == "AuthRequest")
    branch = next(i for i in ir if i.kind == "Branch")
    assert (load.ref, branch.operands[0]) in derived.facts("flowTo")


def test_points_to_field_sensitive(load):
    prog = load(
        "fn f(){ let a = new A(); let b = a; let c = new C(); a.x = c; let d = b.x; let e = new E(); }"
    )
    pt = compute_points_to(prog.ir, prog.functions, prog.cg.resolved)
    allocs = [i for i in prog.ir if i.kind == "Alloc"]
    oa, oc, oe = (f"o{i.label}" for i in allocs)
    load_d = next(i for i in prog.ir if i.kind == "FieldLoad")
    assert pt.of(load_d.ref) == {oc}
    a_ref = allocs[0].ref
    assert not pt.may_alias(a_ref, allocs[2].ref)


def test_tags_on_fig4(config):
    prog = load_program_files([CORPUS / "p1_vulnerable.osl"], config)
    sdg = full_scope(prog)
    tags = compute_oauth_tags(sdg, derive_dependence_facts(sdg), config, prog.ir)
    by_label: dict[int, set[str]] = {}
    for t in tags:
        by_label.setdefault(t.label, set()).add(t.tag)
    ir = prog.ir
    entry = next(i for i in ir if i.kind == "Entry")
    assert "auth_req" in by_label[entry.label]
    req = next(i for i in ir if i.kind == "FieldLoad" and i.operand_names[0] == "request" and i.field == "redirect_uri")
    assert "req_URI" in by_label[req.label]
    send = next(i for i in ir if i.kind == "Call" and i.callee == "sendRedirect")
    assert "redirect" in by_label[send.label]
    # value tags propagate along flowTo, structural tags do not
    assert "req_URI" in by_label[send.label]


def test_tag_config_validation(tmp_path):
    bad = tmp_path / "tags"
    bad.write_text("sources:\n  foo: not_a_tag\n")
    with pytest.raises(TagConfigError):
        TagConfig.load(bad)


def test_tag_config_digest_stable(config):
    assert config.digest() == TagConfig.load().digest()
