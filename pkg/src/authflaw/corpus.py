"""Run a directory of OSL programs against a manifest of expected verdicts."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import yaml

from .pipeline import Analyzer, RunOptions, load_program_files
from .signatures import OUTCOMES, PropertySignature, load_properties


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRow:
    file: str
    property: str
    expected: str
    actual: str

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


@dataclass
class CorpusSummary:
    rows: list[CorpusRow] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def mismatches(self) -> list[CorpusRow]:
        return [r for r in self.rows if not r.ok]

    @property
    def files(self) -> list[str]:
        return sorted({r.file for r in self.rows})

    def render(self) -> str:
        lines = [f"{'file':<28} {'property':<8} {'expected':<15} {'actual':<15}"]
        for r in self.rows:
            mark = "" if r.ok else "  MISMATCH"
            lines.append(f"{r.file:<28} {r.property:<8} {r.expected:<15} {r.actual:<15}{mark}")
        lines.append(f"{len(self.files)} files, {len(self.rows)} verdicts, {len(self.mismatches)} mismatches")
        return "\n".join(lines) + "\n"


def load_manifest(path: Union[str, Path]) -> dict[str, dict[str, str]]:
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    files = data.get("files", {}) if isinstance(data, Mapping) else None
    if not isinstance(files, Mapping):
        raise ManifestError(f"{path}: expected a 'files' mapping")
    out = {}
    for name, expected in files.items():
        if not isinstance(expected, Mapping):
            raise ManifestError(f"{path}: entry for {name} must map property ids to outcomes")
        for pid, outcome in expected.items():
            if outcome not in OUTCOMES:
                raise ManifestError(f"{path}: {name} {pid}: unknown outcome {outcome!r}")
        out[str(name)] = {str(k): str(v) for k, v in expected.items()}
    return out


def run_corpus(
    directory: Union[str, Path],
    manifest: Optional[Union[str, Path, Mapping[str, Mapping[str, str]]]] = None,
    properties: Optional[Sequence[PropertySignature]] = None,
    analyzer: Optional[Analyzer] = None,
    mode: str = "demand",
) -> CorpusSummary:
    directory = Path(directory)
    programs = sorted(p.name for p in directory.glob("*.osl"))
    if manifest is None:
        default = directory / "manifest.yaml"
        if not programs:
            return CorpusSummary()
        if not default.exists():
            raise ManifestError(f"{directory}: no manifest given and no manifest.yaml present")
        manifest = default
    expected = manifest if isinstance(manifest, Mapping) else load_manifest(manifest)
    missing = sorted(set(expected) - set(programs))
    extra = sorted(set(programs) - set(expected))
    if missing or extra:
        parts = []
        if missing:
            parts.append("listed but missing: " + ", ".join(missing))
        if extra:
            parts.append("present but not listed: " + ", ".join(extra))
        raise ManifestError("manifest does not match corpus (" + "; ".join(parts) + ")")
    analyzer = analyzer or Analyzer()
    props = list(properties) if properties is not None else load_properties()
    by_id = {p.id for p in props}
    summary = CorpusSummary()
    start = time.perf_counter()
    for name in programs:
        unknown = sorted(set(expected[name]) - by_id)
        if unknown:
            raise ManifestError(f"{name}: unknown property id(s) {', '.join(unknown)}")
        wanted = [p for p in props if p.id in expected[name]]
        prog = load_program_files([directory / name], analyzer.config)
        result = analyzer.run(prog, wanted, RunOptions(mode=mode))
        for v in result.verdicts:
            summary.rows.append(CorpusRow(name, v.property, expected[name][v.property], v.outcome))
    summary.seconds = time.perf_counter() - start
    return summary
