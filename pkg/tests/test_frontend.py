from __future__ import annotations

import pytest

from authflaw.osl import OSLSemanticError, OSLSyntaxError, build_cfg, lower_to_ir, parse_program

from oracles import CORPUS


def lower(text, builtins=None):
    return lower_to_ir(parse_program(text, builtins=builtins))


def test_minimal_program():
    prog = parse_program("fn f(){ let x = 0; }")
    assert prog.function_names == ("f",)
    assert len(prog.function("f").body) == 1


def test_redirect_fallback_sample_shape():
    prog = parse_program((CORPUS / "p1_vulnerable.osl").read_text())
    assert prog.function_names == ("AuthRequest",)
    ir = lower_to_ir(prog)
    stmts = [i for i in ir if i.kind != "Entry"]
    assert len(stmts) >= 10


def test_empty_expression_is_a_syntax_error():
    with pytest.raises(OSLSyntaxError) as exc:
        parse_program("fn f(){ let x = ; }")
    assert exc.value.line == 1
    assert exc.value.col == 17


def test_duplicate_function():
    with pytest.raises(OSLSemanticError):
        parse_program("fn f(){ } fn f(){ }")


def test_undeclared_identifier():
    with pytest.raises(OSLSemanticError):
        parse_program("fn f(){ let x = y; }")


def test_undeclared_builtin_when_builtins_given():
    with pytest.raises(OSLSemanticError):
        parse_program("fn f(){ mystery(); }", builtins={"known"})
    parse_program("fn f(){ known(); }", builtins={"known"})


def test_constant_assignment_fact():
    ir = lower("fn f(){ let r1 = 0; }")
    (const,) = [i for i in ir if i.kind == "Const"]
    assert ("assign", (const.ref, const.ref, "#0")) in ir.base_facts()


def test_branch_fact_names_condition_and_arms():
    ir = lower("fn f(c){ if (c) { let a = 1; } else { let b = 2; } }")
    (br,) = [i for i in ir if i.kind == "Branch"]
    facts = dict((p, a) for p, a in ir.base_facts() if p == "branch")
    t, f = br.successors
    assert facts["branch"] == (br.ref, br.operands[0], str(t), str(f))
    assert ir[t].kind == "Const" and ir[f].kind == "Const"


def test_alloc_fresh_location():
    ir = lower("fn f(){ let y = new Obj(); }")
    (al,) = [i for i in ir if i.kind == "Alloc"]
    assert ("alloc", (al.ref, al.ref, f"o{al.label}")) in ir.base_facts()


def test_temporaries_follow_label_order():
    ir = lower("fn f(a, b){ let x = a + b + a; g(x + b); } fn g(v){ }")
    temps = [i for i in ir if i.target and i.target.startswith("%t")]
    numbers = [int(i.target[2:]) for i in temps]
    assert numbers == sorted(numbers)
    assert len(set(numbers)) == len(numbers)


def test_labels_unique_and_ordered():
    ir = lower((CORPUS / "compliant_server.osl").read_text())
    labels = [i.label for i in ir]
    assert labels == sorted(set(labels))


def test_round_trip_determinism():
    text = (CORPUS / "compliant_server.osl").read_text()
    a, b = lower(text), lower(text)
    assert [i.render() for i in a] == [i.render() for i in b]
    assert a.base_facts() == b.base_facts()


def test_fact_completeness():
    # one assign fact per operand of an Assign/Const, one alloc per Alloc, one branch per Branch
    for path in sorted(CORPUS.glob("*.osl")):
        ir = lower(path.read_text())
        facts = ir.base_facts()
        count = lambda p: sum(1 for q, _ in facts if q == p)
        assert count("assign") == sum(len(i.operands) for i in ir if i.kind in ("Assign", "Const"))
        assert count("alloc") == sum(1 for i in ir if i.kind == "Alloc")
        assert count("branch") == sum(1 for i in ir if i.kind == "Branch")


def test_cfg_straight_line_follow():
    ir = lower("fn f(){ let a = 1; let b = 2; }")
    cfg = build_cfg(ir)
    consts = [i.label for i in ir if i.kind == "Const"]
    assert (consts[0], consts[1]) in cfg.follow


def test_cfg_arms_not_related():
    ir = lower("fn f(c){ if (c) { let a = 1; let a2 = 3; } else { let b = 2; } let z = 4; }")
    cfg = build_cfg(ir)
    (br,) = [i for i in ir if i.kind == "Branch"]
    t, f = br.successors
    arm_t = {t} | {b for a, b in cfg.follow if a == t}
    follow = set(cfg.follow)
    assert (br.label, t) in follow and (br.label, f) in follow
    for x in arm_t:
        assert (x, f) not in follow and (f, x) not in follow


def test_cfg_null_check_two_successors():
    ir = lower((CORPUS / "p1_vulnerable.osl").read_text())
    cfg = build_cfg(ir)
    (br,) = [i for i in ir if i.kind == "Branch"]
    succ = {b for a, b in cfg.follow if a == br.label}
    assert len(succ) == 2
    kinds = {ir[s].kind for s in succ}
    assert "FieldLoad" in kinds  # the arm reading client.redirect_uri


def test_unreachable_code_reported_not_removed():
    ir = lower("fn f(){ return 1; let dead = 2; }")
    cfg = build_cfg(ir)
    dead = [i for i in ir if i.kind == "Const" and i.operands == ("#2",)]
    assert dead and dead[0].label in cfg.unreachable
