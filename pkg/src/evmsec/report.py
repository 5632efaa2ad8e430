"""End-to-end analysis of one contract and its text/JSON reports."""

from __future__ import annotations

import json
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .analysis import extract_base_facts, infer
from .analysis.facts import MEMORY_OFFSET_OPS
from .datalog.engine import DEFAULT_MAX_FACTS
from .decompiler import DecompileOptions, decompile, dump_ir
from .decompiler.ir import Const
from .dsl import FactContext, classify
from .frontend import CodeImage, decode_bytecode
from .properties import catalog

SCHEMA_VERSION = 1


class AnalysisError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage, self.message = stage, message


@dataclass(frozen=True)
class AnalyzeOptions:
    properties: tuple[str, ...] | None = None  # None: every built-in property
    pattern_dirs: tuple[str, ...] = ()
    inline: bool = True
    inline_depth: int = 2
    strict_jumps: bool = False
    optimize: bool = True
    opaque_offsets: bool = False
    max_facts: int = DEFAULT_MAX_FACTS
    dump_facts: str | None = None
    dump_ir: str | None = None

    def decompile_options(self) -> DecompileOptions:
        return DecompileOptions(self.inline, self.inline_depth, self.strict_jumps, self.optimize)


@dataclass
class Record:
    label: str
    offset: int
    opcode: str
    verdict: str
    witnesses: dict = field(default_factory=dict)


@dataclass
class PropertyReport:
    name: str
    kind: str
    verdict: str
    counts: dict = field(default_factory=dict)
    records: list[Record] = field(default_factory=list)
    witnesses: dict = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)


@dataclass
class AnalysisReport:
    contract: str
    flags: list[str] = field(default_factory=list)
    properties: list[PropertyReport] = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    error: dict | None = None
    timing: dict = field(default_factory=dict, compare=False)

    @property
    def has_violation(self) -> bool:
        return any(p.verdict == "violation" for p in self.properties)

    @property
    def has_warning(self) -> bool:
        return any(p.verdict == "warning" for p in self.properties)

    def property(self, name: str) -> PropertyReport | None:
        return next((p for p in self.properties if p.name == name), None)

    def to_dict(self, timing: bool = False) -> dict:
        d = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        if not timing:
            d.pop("timing")
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisReport":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {d.get('schema_version')!r}")
        props = []
        for p in d["properties"]:
            recs = [Record(**r) for r in p["records"]]
            props.append(PropertyReport(**{**p, "records": recs}))
        return cls(d["contract"], list(d["flags"]), props, dict(d["stats"]), d.get("error"), dict(d.get("timing", {})))

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls.from_dict(json.loads(text))


_HEXLIKE = re.compile(r"(0x)?[0-9a-fA-F\s]*")


def _load(source) -> tuple[str, CodeImage]:
    if isinstance(source, CodeImage):
        return "<code>", source
    if isinstance(source, (bytes, bytearray)):
        return "<bytes>", decode_bytecode(bytes(source))
    if isinstance(source, str) and _HEXLIKE.fullmatch(source.strip()):
        return "<hex>", decode_bytecode(source)
    path = Path(source)
    if path.is_file():
        return str(path), decode_bytecode(path.read_text().strip())
    return "<hex>", decode_bytecode(str(source))


def _offset_stats(cfg) -> dict:
    total = const = 0
    for inst in cfg.instructions():
        if inst.opcode in MEMORY_OFFSET_OPS:
            total += 1
            const += isinstance(inst.args[0], Const)
    return {"offsets_total": total, "offsets_constant": const}


def analyze(source, options: AnalyzeOptions = AnalyzeOptions(), name: str | None = None) -> AnalysisReport:
    """Decode, decompile, infer and classify one contract.

    ``source`` is a hex string, raw bytes, a :class:`CodeImage` or the path of
    a file holding hex. Stage failures raise :class:`AnalysisError`.
    """
    timing: dict[str, float] = {}

    def stage(label, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except AnalysisError:
            raise
        except Exception as e:  # surfaced with the failing stage
            raise AnalysisError(label, f"{type(e).__name__}: {e}") from e
        finally:
            timing[label] = round(time.perf_counter() - t0, 6)

    cid, code = stage("decode", _load, source)
    cid = name or cid
    cat = stage("properties", catalog, options.pattern_dirs)
    props = stage("properties", cat.select, options.properties) if options.properties else list(cat.values())
    cfg = stage("decompile", decompile, code, options.decompile_options())
    if options.dump_ir:
        Path(options.dump_ir).write_text(dump_ir(cfg))
    base = stage("facts", extract_base_facts, cfg, options.opaque_offsets)
    if options.dump_facts:
        Path(options.dump_facts).write_text(base.dump())
    sem = stage("infer", infer, base, options.max_facts)
    ctx = FactContext.from_model(sem)
    verdicts = stage("classify", classify, props, ctx)

    reports = []
    for v in verdicts:
        records = []
        for f in v.findings:
            inst = base.label_info[f.label]
            records.append(Record(f.label, inst.offset, f.opcode, f.verdict.value, dict(f.witnesses)))
        reports.append(PropertyReport(v.name, v.kind, v.verdict.value, v.counts(), records,
                                      dict(v.witnesses), list(v.diagnostics)))
    stats = {
        "bytes": len(code.bytes),
        "blocks": len(cfg.blocks),
        "ssa_instructions": sum(len(b.instructions) for b in cfg.blocks.values()),
        "base_facts": base.count(),
        "derived_facts": sem.model.derived_count(),
        **_offset_stats(cfg),
    }
    stats.update({f"cfg_{k}": v for k, v in cfg.stats.items() if isinstance(v, int)})
    timing["total"] = round(sum(timing.values()), 6)
    return AnalysisReport(cid, sorted(cfg.flags), reports, stats, None, timing)


def error_report(contract: str, err: AnalysisError) -> AnalysisReport:
    return AnalysisReport(contract, error={"stage": err.stage, "message": err.message})


GLYPHS = {"violation": "✗", "warning": "?", "compliant": "✓"}


def render_text(report: AnalysisReport, timing: bool = False) -> str:
    lines = [f"contract {report.contract}"]
    if report.error:
        lines.append(f"  error in {report.error['stage']}: {report.error['message']}")
        return "\n".join(lines) + "\n"
    if report.flags:
        lines.append(f"  flags: {', '.join(report.flags)}")
    for p in report.properties:
        lines.append(f"  {GLYPHS[p.verdict]} {p.name:<6} {p.verdict:<10} ({p.kind})")
        for r in p.records:
            if r.verdict == "compliant":
                continue
            wit = ", ".join(f"{k}={v}" for k, v in sorted(r.witnesses.items()))
            lines.append(f"      {GLYPHS[r.verdict]} {r.opcode} at 0x{r.offset:04x} [{r.label}] {r.verdict}"
                         + (f"  {wit}" if wit else ""))
        if p.witnesses:
            lines.append("      witness: " + ", ".join(f"{k}={v}" for k, v in sorted(p.witnesses.items())))
        for d in p.diagnostics:
            lines.append(f"      note: {d}")
    s = report.stats
    lines.append(f"  {s['ssa_instructions']} SSA instructions, {s['base_facts']} base facts, "
                 f"{s['derived_facts']} derived facts")
    if timing and report.timing:
        lines.append("  timing: " + ", ".join(f"{k}={v:.3f}s" for k, v in report.timing.items()))
    return "\n".join(lines) + "\n"


def render(report, fmt: str = "text", timing: bool = False) -> str:
    """Render one report or a list of reports."""
    reports = report if isinstance(report, list) else [report]
    if fmt == "json":
        if isinstance(report, list):
            doc = {"schema_version": SCHEMA_VERSION, "reports": [r.to_dict(timing) for r in reports]}
            return json.dumps(doc, indent=2, sort_keys=True) + "\n"
        return report.to_json(timing) + "\n"
    if fmt == "text":
        return "\n".join(render_text(r, timing) for r in reports)
    raise ValueError(f"unknown format {fmt!r}")
