from __future__ import annotations

import dataclasses
import re

import pytest

from authflaw.osl.parser import KEYWORDS
from authflaw.pipeline import Analyzer, RunOptions, load_program, load_program_files, run_all
from authflaw.sdg import TagConfig

from oracles import CORPUS

IDENT = re.compile(r'//[^\n]*|"(?:[^"\\\n]|\\.)*"|[A-Za-z_$][A-Za-z0-9_$]*|\S')
ENDPOINTS = ("AuthRequest", "TokenRequest")
P = "zz_"


def _api_names(config: TagConfig) -> set[str]:
    names = set(config.sources) | set(config.markers) | set(config.builtins)
    return {n for n in names if "." not in n} - set(ENDPOINTS)


def rename_source(text: str, keep: set[str]) -> str:
    """Prefix every variable and function name; fields, methods, classes and APIs stay."""
    out, last, prev = [], 0, ""
    for m in IDENT.finditer(text):
        tok = m.group()
        out.append(text[last : m.start()])
        last = m.end()
        if (tok[0].isalpha() or tok[0] in "_$") and tok not in KEYWORDS and prev not in (".", "new") and tok not in keep:
            tok = P + tok
        out.append(tok)
        if not tok.startswith("//"):
            prev = m.group()
    out.append(text[last:])
    return "".join(out)


def rename_config(config: TagConfig) -> TagConfig:
    d = config.to_dict()

    def key(k: str) -> str:
        if k in ENDPOINTS or "." in k:
            return P + k
        return k

    for section in ("sources", "markers"):
        d[section] = {key(k): v for k, v in d[section].items()}
    d["builtins"] = [key(b) for b in d["builtins"]]
    d["fieldKeys"] = {re.sub(r"^\^", "^" + P, k): v for k, v in d["fieldKeys"].items()}
    return TagConfig.from_dict(d)


def rename_query(q):
    for e in ENDPOINTS:
        q = re.sub(rf"\b{e}\b", P + e, q)
    return q


def test_mode_equivalence_over_corpus(analyzer, properties, corpus_files):
    for path in corpus_files:
        prog = load_program_files([path], analyzer.config)
        d = analyzer.run(prog, properties, RunOptions("demand"))
        e = analyzer.run(prog, properties, RunOptions("eager"))
        assert d.outcomes == e.outcomes, path.name


@pytest.mark.parametrize("name", ["p1_vulnerable.osl", "p2_vulnerable.osl", "p3_fixed.osl", "p6_vulnerable.osl", "compliant_server.osl"])
def test_renaming_invariance(analyzer, properties, name):
    text = (CORPUS / name).read_text()
    renamed_cfg = rename_config(analyzer.config)
    renamed_text = rename_source(text, _api_names(analyzer.config))
    assert renamed_text != text
    renamed_props = [dataclasses.replace(p, endpoint_query=rename_query(p.endpoint_query)) for p in properties]
    before = analyzer.run(load_program([(name, text)], analyzer.config), properties)
    other = Analyzer(renamed_cfg, analyzer.samples)
    after = other.run(load_program([(name, renamed_text)], renamed_cfg), renamed_props)
    assert before.outcomes == after.outcomes
    for a, b in zip(before.verdicts, after.verdicts):
        assert len(a.witness) == len(b.witness)
        assert len(a.log) == len(b.log)


def test_empty_program_not_applicable(analyzer, properties):
    prog = load_program([("empty.osl", "")], analyzer.config)
    res = analyzer.run(prog, properties)
    assert set(res.outcomes.values()) == {"not-applicable"}


def test_p3_fixed_satisfied(analyzer, properties):
    prog = load_program_files([CORPUS / "p3_fixed.osl"], analyzer.config)
    assert analyzer.run(prog, properties).verdict("P3").outcome == "satisfied"


def test_run_all_keeps_property_order(analyzer, properties):
    text = (CORPUS / "p1_vulnerable.osl").read_text()
    order = list(reversed(properties))
    res = run_all(text, order, analyzer.config)
    assert [v.property for v in res.verdicts] == [p.id for p in order]
    assert res.verdict("P1").outcome == "violation"


def test_timeout_is_an_error_verdict(analyzer, properties):
    prog = load_program_files([CORPUS / "compliant_server.osl"], analyzer.config)
    res = analyzer.run(prog, properties[:1], RunOptions("eager", timeout=1e-9, cache=False))
    v = res.verdicts[0]
    assert v.outcome == "error"
    assert any("time" in d for d in v.diagnostics)


def test_missing_tag_is_not_checkable(analyzer, properties):
    cfg = analyzer.config.to_dict()
    cfg["markers"] = {k: v for k, v in cfg["markers"].items() if k != "sendRedirect"}
    bare = Analyzer(TagConfig.from_dict(cfg), analyzer.samples)
    prog = load_program_files([CORPUS / "p1_vulnerable.osl"], bare.config)
    v = bare.run(prog, [p for p in properties if p.id == "P1"]).verdicts[0]
    assert v.outcome == "error"


def test_run_options_validation():
    with pytest.raises(ValueError):
        RunOptions("lazy")
    with pytest.raises(ValueError):
        RunOptions(timeout=0)


def test_endpoint_query_override(analyzer, properties):
    prog = load_program_files([CORPUS / "p1_vulnerable.osl"], analyzer.config)
    p1 = [p for p in properties if p.id == "P1"]
    res = analyzer.run(prog, p1, RunOptions(endpoint_query=".* -> TokenRequest -> .*"))
    assert res.verdicts[0].outcome == "not-applicable"


def test_scope_cache(analyzer, properties):
    prog = load_program_files([CORPUS / "p1_fixed.osl"], analyzer.config)
    pair = [p for p in properties if p.id in ("P1", "P2")]
    first, second = analyzer.run(prog, pair).verdicts
    assert not first.stats["cached"] and second.stats["cached"]
    uncached = analyzer.run(prog, pair, RunOptions(cache=False)).verdicts
    assert [v.outcome for v in uncached] == [first.outcome, second.outcome]
    assert not uncached[1].stats["cached"]
