"""Command line: ``evmsec analyze`` and ``evmsec corpus``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .datalog.engine import DEFAULT_MAX_FACTS
from .frontend import RpcError, fetch_code
from .report import AnalysisError, AnalyzeOptions, analyze, error_report, render

RPC_ENV = "EVMSEC_RPC_URL"
EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="evmsec", description="Static security analysis of EVM bytecode.")
    p.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one or more contracts")
    a.add_argument("--hex", action="append", default=[], metavar="FILE", help="file holding hex bytecode (repeatable)")
    a.add_argument("--address", action="append", default=[], help="contract address to fetch over JSON-RPC (repeatable)")
    a.add_argument("--rpc", default=os.environ.get(RPC_ENV), help=f"JSON-RPC endpoint (default: ${RPC_ENV})")
    a.add_argument("--properties", help="comma-separated property names (default: all built-in)")
    a.add_argument("--patterns", action="append", default=[], metavar="DIR", help="extra directory of .pattern files")
    a.add_argument("--format", choices=("text", "json"), default="text")
    a.add_argument("--no-inline", action="store_true", help="do not inline internal methods")
    a.add_argument("--inline-depth", type=int, default=2)
    a.add_argument("--no-optimize", action="store_true", help="skip constant propagation and dead-code removal")
    a.add_argument("--opaque-offsets", action="store_true", help="write non-constant memory/storage offsets as top")
    a.add_argument("--strict-jumps", action="store_true", help="fail on jumps whose target cannot be resolved")
    a.add_argument("--dump-facts", metavar="PATH", help="write base facts (single contract only)")
    a.add_argument("--dump-ir", metavar="PATH", help="write the SSA listing (single contract only)")
    a.add_argument("--workers", type=int, default=1, help="contracts analyzed in parallel")
    a.add_argument("--strict-warnings", action="store_true", help="exit 1 on warnings too")
    a.add_argument("--max-facts", type=int, default=DEFAULT_MAX_FACTS, help="ceiling on derived facts")
    a.add_argument("--timing", action="store_true", help="include stage timings in the output")
    a.add_argument("-o", "--output", metavar="PATH", help="write the report here instead of stdout")

    c = sub.add_parser("corpus", help="check the fixture corpus against its expectations")
    c.add_argument("directory", nargs="?", help="fixture directory (default: the bundled corpus)")
    return p


def _job(args):
    name, source, options = args
    try:
        return analyze(source, options, name=name)
    except AnalysisError as e:
        return error_report(name, e)


def cmd_analyze(ns) -> int:
    jobs = []
    if not ns.hex and not ns.address:
        print("evmsec: give at least one --hex FILE or --address ADDR", file=sys.stderr)
        return EXIT_ERROR
    if (ns.dump_facts or ns.dump_ir) and len(ns.hex) + len(ns.address) > 1:
        print("evmsec: --dump-facts/--dump-ir need a single contract", file=sys.stderr)
        return EXIT_ERROR
    options = AnalyzeOptions(
        properties=tuple(x.strip() for x in ns.properties.split(",") if x.strip()) if ns.properties else None,
        pattern_dirs=tuple(ns.patterns), inline=not ns.no_inline, inline_depth=ns.inline_depth,
        strict_jumps=ns.strict_jumps, optimize=not ns.no_optimize, opaque_offsets=ns.opaque_offsets,
        max_facts=ns.max_facts,
        dump_facts=ns.dump_facts, dump_ir=ns.dump_ir,
    )
    failed_fetch = []
    for path in ns.hex:
        p = Path(path)
        if not p.is_file():
            failed_fetch.append(error_report(path, AnalysisError("decode", "no such file")))
            continue
        jobs.append((path, p.read_text().strip(), options))
    if ns.address and not ns.rpc:
        print(f"evmsec: --address needs --rpc or ${RPC_ENV}", file=sys.stderr)
        return EXIT_ERROR
    for addr in ns.address:
        try:
            jobs.append((addr, fetch_code(ns.rpc, addr), options))
        except (RpcError, ValueError) as e:
            failed_fetch.append(error_report(addr, AnalysisError("fetch", str(e))))
    if ns.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=ns.workers) as pool:
            reports = list(pool.map(_job, jobs))
    else:
        reports = [_job(j) for j in jobs]
    reports += failed_fetch
    out = render(reports[0] if len(reports) == 1 else reports, ns.format, ns.timing)
    if ns.output:
        Path(ns.output).write_text(out)
    else:
        sys.stdout.write(out)
    if any(r.error for r in reports):
        return EXIT_ERROR
    if any(r.has_violation for r in reports):
        return EXIT_VIOLATION
    if ns.strict_warnings and any(r.has_warning for r in reports):
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_corpus(ns) -> int:
    from .corpus import format_table, run_corpus

    results = run_corpus(ns.directory)
    sys.stdout.write(format_table(results))
    return EXIT_OK if all(r.ok for r in results) else EXIT_VIOLATION


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if ns.command == "analyze":
        return cmd_analyze(ns)
    return cmd_corpus(ns)


if __name__ == "__main__":
    sys.exit(main())
