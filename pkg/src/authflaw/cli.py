"""Command line: ``analyze``, ``bench`` and ``corpus``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bench import benchmark_modes
from .corpus import ManifestError, run_corpus
from .hybrid import DeltaSampleError, load_delta_samples
from .osl import OSLSemanticError, OSLSyntaxError
from .pipeline import DEFAULT_TIMEOUT, MODES, Analyzer, RunOptions, load_program_files
from .report import exit_status, render
from .sdg import TagConfig, TagConfigError
from .signatures import SignatureError, load_properties, select_properties
from .slicing import QuerySyntaxError, parse_endpoint_query

log = logging.getLogger("authflaw")

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError("timeout must be positive")
    return value


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--properties", default="all", help="comma-separated property ids, or 'all'")
    p.add_argument("--properties-dir", help="directory of *.dl property files (default: bundled set)")
    p.add_argument("--config", help="tag configuration file (YAML)")
    p.add_argument("--delta-samples", help="regex reference patterns and samples (YAML)")
    p.add_argument("--timeout", type=_positive, default=DEFAULT_TIMEOUT, help="seconds per property")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="authflaw", description="Check OAuth 2.0 server code for logic flaws.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="check properties on a program")
    a.add_argument("paths", nargs="+", help="OSL source files forming one program")
    _common(a)
    a.add_argument("--mode", choices=MODES, default="demand")
    a.add_argument("--endpoint-query", help="override every property's endpoint query")
    a.add_argument("--report", help="write the report here instead of stdout")
    a.add_argument("--format", choices=("json", "text"), default="json")
    a.add_argument("--all-witnesses", action="store_true")
    a.add_argument("--no-timestamps", action="store_true", help="omit timestamps and wall times")

    b = sub.add_parser("bench", help="compare demand-driven and eager analysis")
    b.add_argument("path")
    _common(b)
    b.add_argument("--repeats", type=int, default=1)

    c = sub.add_parser("corpus", help="check a directory of programs against expected verdicts")
    c.add_argument("directory")
    c.add_argument("--manifest", help="expected verdicts (default: <directory>/manifest.yaml)")
    _common(c)
    c.add_argument("--mode", choices=MODES, default="demand")
    return parser


def _analyzer(args) -> Analyzer:
    config = TagConfig.load(args.config) if args.config else TagConfig.load()
    samples = load_delta_samples(args.delta_samples) if args.delta_samples else None
    return Analyzer(config, samples)


def _properties(args):
    sigs = load_properties(args.properties_dir)
    return select_properties(sigs, args.properties)


def _cmd_analyze(args) -> int:
    analyzer = _analyzer(args)
    props = _properties(args)
    if args.endpoint_query:
        parse_endpoint_query(args.endpoint_query)
    elif args.mode == "demand":
        missing = [p.id for p in props if not p.endpoint_query]
        if missing:
            raise UsageError(f"demand mode needs an endpoint query; none declared for {', '.join(missing)}")
    prog = load_program_files(args.paths, analyzer.config)
    for diag in prog.cg.diagnostics:
        log.warning("%s", diag)
    opts = RunOptions(args.mode, args.endpoint_query, args.timeout, args.all_witnesses)
    result = analyzer.run(prog, props, opts)
    text = render(result, args.format, not args.no_timestamps, args.all_witnesses)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
        if args.format == "json":
            # keep a short summary on the terminal
            sys.stdout.write(render(result, "text", not args.no_timestamps))
    else:
        sys.stdout.write(text)
    return exit_status([result])


def _cmd_bench(args) -> int:
    analyzer = _analyzer(args)
    props = _properties(args)
    missing = [p.id for p in props if not p.endpoint_query]
    if missing:
        raise UsageError(f"bench needs endpoint queries; none declared for {', '.join(missing)}")
    prog = load_program_files([args.path], analyzer.config)
    table = benchmark_modes(analyzer, prog, props, args.timeout, args.repeats)
    sys.stdout.write(table.render())
    return EXIT_OK if table.verdicts_identical else EXIT_ERROR


def _cmd_corpus(args) -> int:
    analyzer = _analyzer(args)
    props = _properties(args)
    summary = run_corpus(args.directory, args.manifest, props, analyzer, args.mode)
    sys.stdout.write(summary.render())
    return EXIT_OK if not summary.mismatches else EXIT_VIOLATION


COMMANDS = {"analyze": _cmd_analyze, "bench": _cmd_bench, "corpus": _cmd_corpus}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (
        OSError,
        OSLSyntaxError,
        OSLSemanticError,
        SignatureError,
        TagConfigError,
        DeltaSampleError,
        ManifestError,
        QuerySyntaxError,
        UsageError,
    ) as exc:
        print(f"authflaw: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
