from __future__ import annotations

import pytest

from authflaw.hybrid import (
    ConservativePredicate,
    DeltaSampleError,
    DeltaSampleSet,
    classify_pattern,
    delta_test,
    find_conservative_predicates,
    fold_constant,
    load_delta_samples,
    refine_and_recheck,
)
from authflaw.pipeline import RunOptions, load_program_files
from authflaw.signatures import Verdict

from oracles import CORPUS

BAD = "[a-zA-Z][a-zA-Z0-9+.-]+:"
REF = "[a-zA-Z][a-zA-Z0-9+.-]*:"


@pytest.fixture(scope="module")
def samples():
    return load_delta_samples()


def scope_of(analyzer, name):
    prog = load_program_files([CORPUS / name], analyzer.config)
    return prog, analyzer.analyze_scope(prog, prog.functions)


def test_delta_one_letter_scheme():
    r = delta_test(BAD, REF, ["a:"])
    assert r.differing == ("a:",) and not r.equivalent


def test_delta_identical_patterns(samples):
    for ss in samples.values():
        assert delta_test(ss.reference, ss.reference, ss).equivalent


def test_delta_empty_samples():
    with pytest.raises(DeltaSampleError):
        delta_test(BAD, REF, [])


def test_delta_non_compiling_program_pattern():
    r = delta_test("[unclosed", REF, ["a:"])
    assert r.error and not r.equivalent


def test_sample_set_validation():
    with pytest.raises(DeltaSampleError):
        DeltaSampleSet("x", REF, ())
    with pytest.raises(DeltaSampleError):
        DeltaSampleSet("x", "[", ("a",))


def test_classification(samples):
    assert classify_pattern(BAD, samples) == "absolute-uri"
    assert classify_pattern("[^#]*", samples) == "fragment-free"
    assert classify_pattern("[", samples) is None


def test_cve_analog_one_predicate(analyzer, samples):
    prog, sc = scope_of(analyzer, "p2_vulnerable.osl")
    preds = sc.predicates
    assert len(preds) == 1
    (p,) = preds
    assert p.pattern == BAD and p.check == "absolute-uri"


def test_no_regex_no_predicates(analyzer):
    _, sc = scope_of(analyzer, "p1_fixed.osl")
    assert sc.predicates == []


def test_concatenated_pattern_is_folded(analyzer):
    prog, sc = scope_of(analyzer, "p2_concat_fixed.osl")
    (p,) = sc.predicates
    assert p.pattern == "[a-zA-Z]" + "[a-zA-Z0-9+.-]*:"
    assert p.check == "absolute-uri"


def test_dynamic_pattern_is_unresolvable(analyzer):
    _, sc = scope_of(analyzer, "p2_dynamic_pattern.osl")
    (p,) = sc.predicates
    assert p.pattern is None and p.reason == "unresolvable-pattern"


def test_fold_constant_literal_chain(load):
    prog = load('fn f(){ let a = "x"; let b = a + "y"; let c = b; }')
    last = [i for i in prog.ir if i.kind == "Assign"][-1]
    assert fold_constant(prog.ir, last.ref) == "xy"


class Recorder:
    """recheck stub: satisfied once every branch in ``needed`` is restored."""

    def __init__(self, needed):
        self.needed = set(needed)
        self.calls = []

    def __call__(self, restored):
        self.calls.append(set(restored))
        return Verdict("P", "satisfied" if self.needed <= restored else "violation")


def pred(branch, pattern, check="absolute-uri"):
    return ConservativePredicate(branch, branch + 100, pattern, check)


def test_refine_without_predicates_keeps_verdict(samples):
    rec = Recorder({1})
    v, log = refine_and_recheck([], samples, rec)
    assert v.outcome == "violation" and log == [] and len(rec.calls) == 1


def test_refine_flips_equivalent_only(samples):
    rec = Recorder({1, 2})
    preds = [pred(1, REF), pred(2, BAD)]
    v, log = refine_and_recheck(preds, samples, rec)
    assert v.outcome == "violation"
    assert [e["flipped"] for e in log] == [True, False]
    assert len(rec.calls) <= 1 + len(preds)


def test_refine_reaches_satisfied(samples):
    rec = Recorder({1, 2})
    v, log = refine_and_recheck([pred(1, REF), pred(2, "[^#]*", "fragment-free")], samples, rec)
    assert v.outcome == "satisfied"
    assert all(e["flipped"] for e in log)


def test_pipeline_cve_analog(analyzer, properties):
    p2 = [p for p in properties if p.id == "P2"]
    for name, outcome, flipped in (("p2_vulnerable.osl", "violation", False), ("p2_fixed.osl", "satisfied", True)):
        prog = load_program_files([CORPUS / name], analyzer.config)
        v = analyzer.run(prog, p2).verdicts[0]
        assert v.outcome == outcome
        assert [e["flipped"] for e in v.log] == [flipped]
