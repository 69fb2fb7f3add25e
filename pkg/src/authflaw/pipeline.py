"""End-to-end analysis: parse, slice, build the SDG, derive facts, check properties."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import __version__
from .datalog import DatalogError, EvaluationTimeout, FactDB
from .hybrid import (
    ConservativePredicate,
    DeltaSampleSet,
    check_seeds,
    find_conservative_predicates,
    load_delta_samples,
    refine_and_recheck,
)
from .osl import CFG, IRProgram, build_cfg, lower_to_ir, parse_files
from .osl.ast import Program
from .sdg import SDG, TagConfig, build_sdg, derive_dependence_facts, seed_tags, tag_database
from .signatures import (
    ERROR,
    NOT_APPLICABLE,
    CompiledSignature,
    PropertySignature,
    Verdict,
    check_property,
    compile_signature,
)
from .slicing import Callgraph, QuerySyntaxError, build_callgraph, slice_functions

log = logging.getLogger(__name__)

MODES = ("demand", "eager")
DEFAULT_TIMEOUT = 600.0


class AnalysisError(Exception):
    pass


@dataclass(frozen=True)
class LoadedProgram:
    name: str
    ast: Program
    ir: IRProgram
    cfg: CFG
    cg: Callgraph

    @property
    def functions(self) -> tuple[str, ...]:
        return self.ir.function_names


def load_program(
    sources: Sequence[tuple[str, str]], config: TagConfig, name: Optional[str] = None
) -> LoadedProgram:
    """Parse and lower ``(path, text)`` pairs as one program."""
    api = config.api_names()
    ast = parse_files(sources, builtins=api)
    ir = lower_to_ir(ast)
    cfg = build_cfg(ir)
    cg = build_callgraph(ir, api)
    if name is None:
        name = ",".join(p for p, _ in sources)
    return LoadedProgram(name, ast, ir, cfg, cg)


def load_program_files(paths: Iterable[Union[str, Path]], config: TagConfig) -> LoadedProgram:
    sources = []
    for p in paths:
        path = Path(p)
        sources.append((str(path), path.read_text(encoding="utf-8")))
    return load_program(sources, config)


@dataclass
class ScopeAnalysis:
    scope: frozenset[str]
    sdg: SDG
    facts: FactDB  # dependence facts plus OAuthTag
    predicates: list[ConservativePredicate]
    times: dict[str, float]

    @property
    def branches(self) -> list[tuple[str, ...]]:
        return self.sdg.facts_of("branch")


@dataclass
class RunOptions:
    mode: str = "demand"
    endpoint_query: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    all_witnesses: bool = False
    cache: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")


@dataclass
class RunResult:
    program: str
    mode: str
    verdicts: list[Verdict]
    diagnostics: list[str] = field(default_factory=list)
    version: str = __version__
    config_digest: str = ""

    def verdict(self, pid: str) -> Verdict:
        for v in self.verdicts:
            if v.property == pid:
                return v
        raise KeyError(pid)

    @property
    def outcomes(self) -> dict[str, str]:
        return {v.property: v.outcome for v in self.verdicts}


class Analyzer:
    def __init__(
        self,
        config: Optional[TagConfig] = None,
        samples: Optional[Mapping[str, DeltaSampleSet]] = None,
    ):
        self.config = config or TagConfig.load()
        self.samples = dict(samples) if samples is not None else load_delta_samples()
        self._compiled: dict[str, CompiledSignature] = {}

    @property
    def producible_tags(self) -> set[str]:
        return self.config.producible_tags() | {s.tag for s in self.samples.values() if s.tag}

    def compiled(self, sig: PropertySignature) -> CompiledSignature:
        c = self._compiled.get(sig.id)
        if c is None or self._compiled.get(sig.id + "#src") != sig.source:
            c = compile_signature(sig)
            self._compiled[sig.id] = c
            self._compiled[sig.id + "#src"] = sig.source  # type: ignore[assignment]
        return c

    def analyze_scope(self, prog: LoadedProgram, scope: Iterable[str], deadline: Optional[float] = None) -> ScopeAnalysis:
        times: dict[str, float] = {}
        t = time.perf_counter()
        sdg = build_sdg(prog.ir, prog.cfg, prog.cg, scope)
        times["sdg_seconds"] = time.perf_counter() - t
        t = time.perf_counter()
        dep = derive_dependence_facts(sdg, deadline=deadline)
        times["derive_seconds"] = time.perf_counter() - t
        t = time.perf_counter()
        preds = find_conservative_predicates(sdg, dep, prog.ir, self.samples)
        seeds = seed_tags(sdg, prog.ir, self.config, check_seeds(sdg, prog.ir, self.samples))
        facts = tag_database(dep, seeds, deadline=deadline)
        times["tags_seconds"] = time.perf_counter() - t
        return ScopeAnalysis(frozenset(scope), sdg, facts, preds, times)

    def run(
        self,
        prog: LoadedProgram,
        properties: Sequence[PropertySignature],
        options: Optional[RunOptions] = None,
    ) -> RunResult:
        options = options or RunOptions()
        cache: dict[frozenset[str], ScopeAnalysis] = {}
        verdicts = [self._check_one(prog, sig, options, cache) for sig in properties]
        return RunResult(prog.name, options.mode, verdicts, list(prog.cg.diagnostics), __version__, self.config.digest())

    def _check_one(
        self,
        prog: LoadedProgram,
        sig: PropertySignature,
        options: RunOptions,
        cache: dict[frozenset[str], ScopeAnalysis],
    ) -> Verdict:
        start = time.perf_counter()
        deadline = time.monotonic() + options.timeout
        query = options.endpoint_query or sig.endpoint_query
        stats: dict = {}
        try:
            missing = sorted(sig.tags - self.producible_tags)
            if missing:
                return Verdict(sig.id, ERROR, diagnostics=[f"not checkable: no configuration produces tag(s) {', '.join(missing)}"])
            t = time.perf_counter()
            if query is None:
                if options.mode == "demand":
                    return Verdict(sig.id, ERROR, diagnostics=["demand mode needs an endpoint query for this property"])
                sliced = set(prog.functions)
            else:
                sliced = slice_functions(prog.cg, query)
            stats["slice_seconds"] = time.perf_counter() - t
            stats["slice_functions"] = len(sliced)
            if not sliced:
                v = Verdict(sig.id, NOT_APPLICABLE, diagnostics=["endpoint not present"])
                v.stats = stats
                return v
            scope = frozenset(sliced) if options.mode == "demand" else frozenset(prog.functions)
            analysis = cache.get(scope) if options.cache else None
            stats["cached"] = analysis is not None
            if analysis is None:
                analysis = self.analyze_scope(prog, scope, deadline)
                stats.update(analysis.times)
                if options.cache:
                    cache[scope] = analysis
            compiled = self.compiled(sig)
            v = self._decide(sig, compiled, analysis, options, deadline)
            stats.update(
                scope_functions=len(scope),
                sdg_nodes=analysis.sdg.node_count,
                sdg_control_edges=len(analysis.sdg.X),
                sdg_data_edges=len(analysis.sdg.Y),
                base_facts=len(analysis.sdg.facts),
                flowTo=analysis.facts.size("flowTo"),
                followBy=analysis.facts.size("followBy"),
                OAuthTag=analysis.facts.size("OAuthTag"),
                conservative_predicates=len(analysis.predicates),
            )
            stats["check_seconds"] = v.stats.pop("check_seconds", 0.0)
            stats["embeddings"] = v.stats.pop("embeddings", 0)
            v.stats = stats
        except EvaluationTimeout:
            v = Verdict(sig.id, ERROR, diagnostics=[f"timeout after {options.timeout:g}s"], stats=stats)
        except (DatalogError, QuerySyntaxError, ValueError) as exc:
            v = Verdict(sig.id, ERROR, diagnostics=[f"{type(exc).__name__}: {exc}"], stats=stats)
        v.stats["total_seconds"] = time.perf_counter() - start
        return v

    def _decide(
        self,
        sig: PropertySignature,
        compiled: CompiledSignature,
        analysis: ScopeAnalysis,
        options: RunOptions,
        deadline: float,
    ) -> Verdict:
        branches = analysis.branches
        pending = {p.branch for p in analysis.predicates} if sig.uses_branch else set()

        def recheck(restored: frozenset[int]) -> Verdict:
            active = [b for b in branches if int(b[0]) not in pending or int(b[0]) in restored]
            db = analysis.facts.overlay({"branch": active}) if pending else analysis.facts
            return check_property(db, sig, compiled, deadline, options.all_witnesses)

        if not pending:
            return recheck(frozenset())
        relevant = [p for p in analysis.predicates if p.branch in pending]
        verdict, entries = refine_and_recheck(relevant, self.samples, recheck, sig.mode)
        verdict.log = entries
        for e in entries:
            if e.get("note"):
                verdict.diagnostics.append(e["note"])
        return verdict


def run_all(
    program: Union[LoadedProgram, str],
    properties: Sequence[PropertySignature],
    config: Optional[TagConfig] = None,
    mode: str = "demand",
    samples: Optional[Mapping[str, DeltaSampleSet]] = None,
    **kw,
) -> RunResult:
    """Check ``properties`` on a program (a LoadedProgram or OSL source text)."""
    analyzer = Analyzer(config, samples)
    if isinstance(program, str):
        program = load_program([("<input>", program)], analyzer.config)
    return analyzer.run(program, properties, RunOptions(mode=mode, **kw))
