"""JSON and text reports for analysis runs."""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Optional

from .pipeline import RunResult
from .signatures import Verdict

# stats keys holding wall times; dropped along with timestamps for golden output
_TIME_SUFFIX = "_seconds"


def _clean_stats(stats: dict, timestamps: bool) -> dict:
    out = {}
    for k in sorted(stats):
        v = stats[k]
        if k.endswith(_TIME_SUFFIX):
            if not timestamps:
                continue
            v = round(float(v), 6)
        out[k] = v
    return out


def verdict_dict(v: Verdict, timestamps: bool = True, all_witnesses: bool = False) -> dict:
    d = {
        "property": v.property,
        "outcome": v.outcome,
        "witness": sorted(v.witness_labels),
        "embedding": dict(v.witness),
        "stats": _clean_stats(v.stats, timestamps),
    }
    if v.diagnostics:
        d["diagnostics"] = list(v.diagnostics)
    if v.log:
        d["deltaLog"] = list(v.log)
    if all_witnesses:
        d["witnesses"] = [dict(w) for w in v.witnesses]
    return d


def report_dict(result: RunResult, timestamps: bool = True, all_witnesses: bool = False) -> dict:
    d = {
        "program": result.program,
        "mode": result.mode,
        "results": [verdict_dict(v, timestamps, all_witnesses) for v in result.verdicts],
        "diagnostics": list(result.diagnostics),
        "version": result.version,
        "configDigest": result.config_digest,
    }
    if timestamps:
        d["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return d


def render_json(result: RunResult, timestamps: bool = True, all_witnesses: bool = False) -> str:
    return json.dumps(report_dict(result, timestamps, all_witnesses), indent=2, sort_keys=False) + "\n"


def render_text(result: RunResult, timestamps: bool = True, all_witnesses: bool = False) -> str:
    lines = [f"program: {result.program}", f"mode: {result.mode}"]
    width = max((len(v.property) for v in result.verdicts), default=2)
    for v in result.verdicts:
        line = f"  {v.property:<{width}}  {v.outcome}"
        if v.witness:
            line += "  witness " + ", ".join(f"{k}={n}" for k, n in v.witness.items())
        lines.append(line)
        for diag in v.diagnostics:
            lines.append(f"  {'':<{width}}  note: {diag}")
        for e in v.log:
            if e.get("flipped"):
                what = "matches the reference on every sample; branch restored"
            elif e.get("differing"):
                what = "differs from the reference on " + ", ".join(repr(s) for s in e["differing"])
            else:
                what = "not tested"
            lines.append(f"  {'':<{width}}  delta test, branch {e['branch']} ({e.get('check') or 'unclassified'}): {what}")
        if all_witnesses and len(v.witnesses) > 1:
            for w in v.witnesses[1:]:
                lines.append(f"  {'':<{width}}  also " + ", ".join(f"{k}={n}" for k, n in w.items()))
        if timestamps and "total_seconds" in v.stats:
            lines.append(f"  {'':<{width}}  time {v.stats['total_seconds']:.3f}s")
    for diag in result.diagnostics:
        lines.append(f"warning: {diag}")
    algo, _, hexdigest = result.config_digest.rpartition(":")
    lines.append(f"version {result.version}, config {algo + ':' if algo else ''}{hexdigest[:12]}")
    return "\n".join(lines) + "\n"


def render(result: RunResult, fmt: str = "json", timestamps: bool = True, all_witnesses: bool = False) -> str:
    if fmt == "json":
        return render_json(result, timestamps, all_witnesses)
    if fmt == "text":
        return render_text(result, timestamps, all_witnesses)
    raise ValueError(f"unknown report format {fmt!r}")


def exit_status(results: list[RunResult], error: Optional[bool] = None) -> int:
    """0 when clean, 1 on any violation, 2 on any analysis error."""
    outcomes = {v.outcome for r in results for v in r.verdicts}
    if error or "error" in outcomes:
        return 2
    if "violation" in outcomes:
        return 1
    return 0
