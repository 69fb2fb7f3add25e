"""Regex-guarded branches and delta testing.

A branch whose condition depends on a ``regexMatch`` call is assumed false
(its ``branch`` fact is withheld) until the program's pattern agrees with a
reference pattern on every configured sample.  Each such predicate is tested
once; the property is re-checked after each flip.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import yaml

from .datalog import FactDB
from .osl.ir import IRProgram, is_literal, literal_value
from .sdg.graph import SDG
from .sdg.tags import VOCABULARY

log = logging.getLogger(__name__)

REGEX_BUILTIN = "regexMatch"
MIN_AGREEMENT = 0.5


class DeltaSampleError(ValueError):
    pass


@dataclass(frozen=True)
class DeltaSampleSet:
    check: str
    reference: str
    samples: tuple[str, ...]
    tag: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.samples:
            raise DeltaSampleError(f"{self.check}: sample set is empty")
        try:
            re.compile(self.reference)
        except re.error as exc:
            raise DeltaSampleError(f"{self.check}: reference pattern does not compile: {exc}") from None
        if self.tag is not None and self.tag not in VOCABULARY:
            raise DeltaSampleError(f"{self.check}: unknown tag {self.tag!r}")


def load_delta_samples(path: Union[str, Path, None] = None) -> dict[str, DeltaSampleSet]:
    if path is None:
        text = resources.files("authflaw").joinpath("config/delta-samples").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    if not isinstance(data, Mapping):
        raise DeltaSampleError("delta samples must be a mapping from check id to entry")
    out = {}
    for check, entry in data.items():
        if not isinstance(entry, Mapping) or "reference" not in entry:
            raise DeltaSampleError(f"{check}: entry needs a 'reference' pattern")
        samples = tuple("" if s is None else str(s) for s in entry.get("samples") or ())
        out[str(check)] = DeltaSampleSet(str(check), str(entry["reference"]), samples, entry.get("tag"))
    return out


@dataclass(frozen=True)
class ConservativePredicate:
    branch: int
    call: int
    pattern: Optional[str]
    check: Optional[str]
    reason: str = "regex-condition"
    diagnostic: str = ""


@dataclass(frozen=True)
class DeltaResult:
    differing: tuple[str, ...]
    error: Optional[str] = None

    @property
    def equivalent(self) -> bool:
        return self.error is None and not self.differing


def _matches(rx: "re.Pattern[str]", s: str) -> bool:
    return rx.fullmatch(s) is not None


def delta_test(actual: str, reference: str, samples: Union[DeltaSampleSet, Sequence[str]]) -> DeltaResult:
    """Samples on which the two patterns disagree under full-match semantics."""
    items = samples.samples if isinstance(samples, DeltaSampleSet) else tuple(samples)
    if not items:
        raise DeltaSampleError("delta test needs at least one sample")
    ref = re.compile(reference)
    try:
        act = re.compile(actual)
    except re.error as exc:
        return DeltaResult((), f"program pattern {actual!r} does not compile: {exc}")
    return DeltaResult(tuple(s for s in items if _matches(act, s) != _matches(ref, s)))


def classify_pattern(pattern: str, sample_sets: Mapping[str, DeltaSampleSet]) -> Optional[str]:
    """The check whose reference agrees with ``pattern`` on the largest share of its samples."""
    try:
        rx = re.compile(pattern)
    except re.error:
        return None
    best: Optional[tuple[float, str]] = None
    for check in sorted(sample_sets):
        ss = sample_sets[check]
        ref = re.compile(ss.reference)
        agree = sum(_matches(rx, s) == _matches(ref, s) for s in ss.samples) / len(ss.samples)
        if agree >= MIN_AGREEMENT and (best is None or agree > best[0]):
            best = (agree, check)
    return best[1] if best else None


def fold_constant(ir: IRProgram, ref: str, _depth: int = 0) -> Optional[str]:
    """Constant string value of ``ref`` through literals, consts, copies and ``+``."""
    if _depth > 64:
        return None
    if is_literal(ref):
        v = literal_value(ref)
        return v if isinstance(v, str) else None
    if not ref.isdigit():
        return None
    ins = ir[int(ref)]
    if ins.kind == "Const":
        return fold_constant(ir, ins.operands[0], _depth + 1)
    if ins.kind == "Assign" and ins.op == "copy":
        return fold_constant(ir, ins.operands[0], _depth + 1)
    if ins.kind == "Assign" and ins.op == "phi":
        vals = {fold_constant(ir, o, _depth + 1) for o in ins.operands}
        return vals.pop() if len(vals) == 1 else None
    if ins.kind == "Assign" and ins.op == "+":
        left = fold_constant(ir, ins.operands[0], _depth + 1)
        right = fold_constant(ir, ins.operands[1], _depth + 1)
        if left is not None and right is not None:
            return left + right
    return None


def regex_calls(sdg: SDG, ir: IRProgram) -> list[int]:
    return sorted(int(L) for L, callee in sdg.facts_of("resolved") if callee == REGEX_BUILTIN)


def find_conservative_predicates(
    sdg: SDG, facts: FactDB, ir: IRProgram, sample_sets: Mapping[str, DeltaSampleSet]
) -> list[ConservativePredicate]:
    """Every branch whose condition flows from a regexMatch call."""
    out: list[ConservativePredicate] = []
    calls = regex_calls(sdg, ir)
    if not calls:
        return out
    branches = sorted(sdg.facts_of("branch"), key=lambda b: int(b[0]))
    for call in calls:
        ins = ir[call]
        pattern = fold_constant(ir, ins.operands[1]) if len(ins.operands) >= 2 else None
        check = classify_pattern(pattern, sample_sets) if pattern is not None else None
        if pattern is None:
            reason, diag = "unresolvable-pattern", f"regexMatch at label {call} has a non-constant pattern"
        else:
            reason, diag = "regex-condition", ""
            try:
                re.compile(pattern)
            except re.error as exc:
                diag = f"pattern {pattern!r} at label {call} does not compile: {exc}"
            if check is None and not diag:
                diag = f"pattern {pattern!r} at label {call} matches no configured check"
        for L, X, _, _ in branches:
            if X == str(call) or facts.contains("flowTo", (str(call), X)):
                out.append(ConservativePredicate(int(L), call, pattern, check, reason, diag))
    return sorted(out, key=lambda p: (p.branch, p.call))


def check_seeds(
    sdg: SDG, ir: IRProgram, sample_sets: Mapping[str, DeltaSampleSet]
) -> list[tuple[int, str]]:
    """Tags for regexMatch calls whose constant pattern is classified as a known check."""
    seeds = []
    for call in regex_calls(sdg, ir):
        ins = ir[call]
        pattern = fold_constant(ir, ins.operands[1]) if len(ins.operands) >= 2 else None
        check = classify_pattern(pattern, sample_sets) if pattern is not None else None
        if check is not None and sample_sets[check].tag:
            seeds.append((call, sample_sets[check].tag))
    return seeds


def refine_and_recheck(
    predicates: Sequence[ConservativePredicate],
    sample_sets: Mapping[str, DeltaSampleSet],
    recheck: Callable[[frozenset[int]], "object"],
    mode: str = "presence",
):
    """Flip predicates that pass their delta test, re-checking after each flip.

    ``recheck(restored)`` evaluates the property with the branch facts in
    ``restored`` put back and returns a verdict.  Returns ``(verdict, log)``.
    """
    restored: frozenset[int] = frozenset()
    verdict = recheck(restored)
    entries: list[dict] = []
    if not predicates:
        return verdict, entries
    flipped: set[tuple[int, int]] = set()
    by_branch: dict[int, list[ConservativePredicate]] = {}
    for p in predicates:
        by_branch.setdefault(p.branch, []).append(p)
    for p in predicates:
        if mode == "presence" and verdict.outcome == "satisfied":
            break
        entry = {"branch": p.branch, "call": p.call, "check": p.check, "pattern": p.pattern}
        if p.pattern is None or p.check is None:
            entry.update(flipped=False, differing=[], note=p.diagnostic or p.reason)
        else:
            result = delta_test(p.pattern, sample_sets[p.check].reference, sample_sets[p.check])
            entry.update(flipped=result.equivalent, differing=list(result.differing))
            if result.error:
                entry["note"] = result.error
            if result.equivalent:
                flipped.add((p.branch, p.call))
                if all((q.branch, q.call) in flipped for q in by_branch[p.branch]):
                    restored = restored | {p.branch}
                    verdict = recheck(restored)
        entry["outcome"] = verdict.outcome
        entries.append(entry)
        log.info("delta test %s", entry)
    return verdict, entries
