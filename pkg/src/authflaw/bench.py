"""Demand-driven versus eager scope: per-property timing and SDG size."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .pipeline import Analyzer, LoadedProgram, RunOptions
from .signatures import ERROR, PropertySignature


@dataclass
class BenchRow:
    property: str
    demand_seconds: float
    eager_seconds: float
    demand_nodes: int
    eager_nodes: int
    demand_outcome: str
    eager_outcome: str
    skipped: str = ""

    @property
    def agree(self) -> bool:
        return self.demand_outcome == self.eager_outcome

    @property
    def time_reduction(self) -> float:
        return 1.0 - self.demand_seconds / self.eager_seconds if self.eager_seconds else 0.0

    @property
    def node_ratio(self) -> float:
        return self.demand_nodes / self.eager_nodes if self.eager_nodes else 1.0


@dataclass
class BenchTable:
    program: str
    rows: list[BenchRow] = field(default_factory=list)

    def _compared(self) -> list[BenchRow]:
        return [r for r in self.rows if not r.skipped]

    @property
    def demand_seconds(self) -> float:
        return sum(r.demand_seconds for r in self._compared())

    @property
    def eager_seconds(self) -> float:
        return sum(r.eager_seconds for r in self._compared())

    @property
    def time_reduction(self) -> float:
        return 1.0 - self.demand_seconds / self.eager_seconds if self.eager_seconds else 0.0

    @property
    def max_node_ratio(self) -> float:
        """Largest demand/eager SDG size ratio over properties analysed in eager mode."""
        return max((r.node_ratio for r in self._compared() if r.eager_nodes), default=1.0)

    @property
    def verdicts_identical(self) -> bool:
        return all(r.agree for r in self._compared())

    def render(self) -> str:
        head = f"{'property':<9} {'demand s':>9} {'eager s':>9} {'red.':>6} {'d.nodes':>8} {'e.nodes':>8}  verdict"
        lines = [f"program: {self.program}", head]
        for r in self.rows:
            if r.skipped:
                lines.append(f"{r.property:<9} skipped: {r.skipped}")
                continue
            verdict = r.demand_outcome if r.agree else f"MISMATCH {r.demand_outcome}/{r.eager_outcome}"
            lines.append(
                f"{r.property:<9} {r.demand_seconds:>9.4f} {r.eager_seconds:>9.4f} "
                f"{r.time_reduction:>6.0%} {r.demand_nodes:>8} {r.eager_nodes:>8}  {verdict}"
            )
        lines.append(
            f"{'total':<9} {self.demand_seconds:>9.4f} {self.eager_seconds:>9.4f} {self.time_reduction:>6.0%}"
        )
        return "\n".join(lines) + "\n"


def benchmark_modes(
    analyzer: Analyzer,
    prog: LoadedProgram,
    properties: Sequence[PropertySignature],
    timeout: Optional[float] = None,
    repeats: int = 1,
) -> BenchTable:
    """Run each property in both modes without scope caching; best of ``repeats``."""
    table = BenchTable(prog.name)
    for sig in properties:
        results = {}
        for mode in ("demand", "eager"):
            opts = RunOptions(mode=mode, cache=False, **({"timeout": timeout} if timeout else {}))
            best = None
            for _ in range(max(1, repeats)):
                t = time.perf_counter()
                v = analyzer.run(prog, [sig], opts).verdicts[0]
                elapsed = time.perf_counter() - t
                if best is None or elapsed < best[0]:
                    best = (elapsed, v)
            results[mode] = best
        (ds, dv), (es, ev) = results["demand"], results["eager"]
        skipped = ""
        if dv.outcome == ERROR or ev.outcome == ERROR:
            skipped = "; ".join(dv.diagnostics + ev.diagnostics) or "error"
        table.rows.append(
            BenchRow(
                sig.id,
                ds,
                es,
                int(dv.stats.get("sdg_nodes", 0)),
                int(ev.stats.get("sdg_nodes", 0)),
                dv.outcome,
                ev.outcome,
                skipped,
            )
        )
    return table


def synthetic_program(helpers: int = 200, helper_size: int = 3) -> str:
    """One five-function authorization chain plus ``helpers`` functions off the endpoint's paths."""
    out = [
        "// Synthetic benchmark: a five-function authorization endpoint chain and",
        f"// {helpers} helper functions that never lie on a path through the endpoint.",
        "// Generated by authflaw.bench.synthetic_program.",
        "fn main(request, response) {",
        "  route(request, response);",
        "}",
        "",
        "fn route(request, response) {",
        "  AuthRequest(request, response);",
        "}",
        "",
        "fn AuthRequest(request, response) {",
        "  let client = GetClient(request.client_id);",
        "  let redirectUri = request.redirect_uri;",
        "  let ok = validate(client, redirectUri);",
        "  let target = buildRedirect(redirectUri);",
        "  if (ok) {",
        "    response.sendRedirect(target);",
        "  } else {",
        "    response.sendError(\"invalid_request\");",
        "  }",
        "}",
        "",
        "fn validate(client, uri) {",
        "  let registered = client.redirect_uri;",
        "  return uri == registered;",
        "}",
        "",
        "fn buildRedirect(uri) {",
        "  let enc = new QueryStringEncoder(uri);",
        "  return enc.toString();",
        "}",
        "",
    ]
    for i in range(helpers):
        out.append(f"fn helper{i}(input) {{")
        out.append("  let acc = new Record(input);")
        for j in range(helper_size):
            out.append(f"  let v{j} = acc.f{j % 3} + \"{i}-{j}\";")
            out.append(f"  acc.f{(j + 1) % 3} = v{j};")
        out.append("  if (acc.f0 == null) {")
        out.append("    log(acc.f1);")
        out.append("  } else {")
        out.append("    log(acc.f2);")
        out.append("  }")
        if i % 10 != 9 and i + 1 < helpers:
            out.append(f"  return helper{i + 1}(acc);")
        else:
            out.append("  return acc;")
        out.append("}")
        out.append("")
    return "\n".join(out)
