"""Run the fixture corpus against its recorded expectations."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import extract_base_facts, infer
from .datalog import parse_atom
from .decompiler import decompile
from .report import AnalysisError, AnalysisReport, AnalyzeOptions, analyze

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def default_fixture_dir() -> Path:
    return Path(__file__).resolve().parents[2] / "fixtures"


@dataclass
class Fixture:
    name: str
    path: Path
    hex: str
    expect: dict
    options: AnalyzeOptions = AnalyzeOptions()

    @property
    def properties(self) -> dict[str, dict]:
        return self.expect.get("properties", {})


@dataclass
class FixtureResult:
    fixture: Fixture
    mismatches: list[str] = field(default_factory=list)
    report: AnalysisReport | None = None

    @property
    def ok(self) -> bool:
        return not self.mismatches


def load_fixture(path: Path) -> Fixture:
    expect = tomllib.loads((path / "expect.toml").read_text())
    opts = expect.get("options", {})
    options = AnalyzeOptions(
        inline=opts.get("inline", True), inline_depth=opts.get("inline_depth", 2),
        strict_jumps=opts.get("strict_jumps", False), optimize=opts.get("optimize", True),
        opaque_offsets=opts.get("opaque_offsets", False),
    )
    return Fixture(path.name, path, (path / "code.hex").read_text().strip(), expect, options)


def load_fixtures(directory: str | Path | None = None) -> list[Fixture]:
    root = Path(directory) if directory else default_fixture_dir()
    return [load_fixture(p) for p in sorted(root.iterdir()) if (p / "expect.toml").is_file()]


def check_fixture(fx: Fixture) -> FixtureResult:
    res = FixtureResult(fx)
    try:
        report = analyze(fx.hex, fx.options, name=fx.name)
    except AnalysisError as e:
        if fx.expect.get("error_stage") == e.stage:
            return res
        res.mismatches.append(f"analysis failed: {e}")
        return res
    res.report = report
    for name, exp in sorted(fx.properties.items()):
        got = report.property(name)
        if got is None:
            res.mismatches.append(f"{name}: not analyzed")
            continue
        if got.verdict != exp["verdict"]:
            res.mismatches.append(f"{name}: expected {exp['verdict']}, got {got.verdict}")
        if "offsets" in exp:
            offs = sorted({r.offset for r in got.records if r.verdict == exp["verdict"]})
            if offs != sorted(exp["offsets"]):
                res.mismatches.append(f"{name}: expected {exp['verdict']} offsets {sorted(exp['offsets'])}, got {offs}")
    for flag in fx.expect.get("flags", []):
        if flag not in report.flags:
            res.mismatches.append(f"missing flag {flag}")
    facts = fx.expect.get("facts", {})
    if facts:
        sem = infer(extract_base_facts(decompile(fx.hex, fx.options.decompile_options()), fx.options.opaque_offsets))
        for text in facts.get("present", []):
            a = parse_atom(text)
            if not sem.model.holds(a.pred, a.terms):
                res.mismatches.append(f"fact {text} not derived")
        for text in facts.get("absent", []):
            a = parse_atom(text)
            if sem.model.holds(a.pred, a.terms):
                res.mismatches.append(f"fact {text} derived but should not be")
    return res


def run_corpus(directory: str | Path | None = None) -> list[FixtureResult]:
    return [check_fixture(fx) for fx in load_fixtures(directory)]


def format_table(results: list[FixtureResult]) -> str:
    width = max((len(r.fixture.name) for r in results), default=10)
    lines = []
    for r in results:
        props = " ".join(f"{k}={v['verdict'][0].upper()}" for k, v in sorted(r.fixture.properties.items()))
        lines.append(f"{'PASS' if r.ok else 'FAIL'}  {r.fixture.name:<{width}}  {props}")
        lines.extend(f"        {m}" for m in r.mismatches)
    passed = sum(r.ok for r in results)
    lines.append(f"{passed}/{len(results)} fixtures pass")
    return "\n".join(lines) + "\n"
