"""Properties as compliance/violation pattern pairs, and their verdicts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from ..analysis.ruleset import instruction_signatures
from .ast import AllInstr, PVar, SomeInstr
from .desugar import desugar
from .evaluate import Evaluator, FactContext
from .parser import PatternSyntaxError, parse_pattern

log = logging.getLogger(__name__)

KINDS = ("instruction", "contract")


class PropertyConfigError(ValueError):
    pass


class Verdict(str, Enum):
    VIOLATION = "violation"
    WARNING = "warning"
    COMPLIANT = "compliant"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class PropertySpec:
    name: str
    kind: str
    anchor: str
    compliance: tuple = ()
    violation: tuple = ()
    description: str = ""
    compliance_text: tuple[str, ...] = ()
    violation_text: tuple[str, ...] = ()
    source: str = ""

    def check_shape(self):
        if self.kind not in KINDS:
            raise PropertyConfigError(f"{self.name}: kind must be one of {', '.join(KINDS)}")
        if self.anchor not in instruction_signatures():
            raise PropertyConfigError(f"{self.name}: unknown anchor instruction {self.anchor!r}")
        if self.kind != "instruction":
            return
        for ast in self.violation:
            if not (isinstance(ast, SomeInstr) and ast.atom.pred == self.anchor):
                raise PropertyConfigError(f"{self.name}: violation pattern must start with 'some {self.anchor}(...)'")
        for ast in self.compliance:
            if not (isinstance(ast, AllInstr) and ast.atom.pred == self.anchor):
                raise PropertyConfigError(f"{self.name}: compliance pattern must start with 'all {self.anchor}(...)'")


@dataclass(frozen=True)
class Finding:
    """Verdict for one anchor instruction."""

    label: str
    opcode: str
    verdict: Verdict
    witnesses: tuple[tuple[str, object], ...] = ()


@dataclass
class PropertyVerdict:
    name: str
    kind: str
    verdict: Verdict
    findings: list[Finding] = field(default_factory=list)
    witnesses: tuple[tuple[str, object], ...] = ()
    diagnostics: list[str] = field(default_factory=list)

    def counts(self) -> dict[str, int]:
        out = {v.value: 0 for v in Verdict}
        for f in self.findings:
            out[f.verdict.value] += 1
        return out


# -- pattern files -----------------------------------------------------------------

_HEADERS = ("name", "kind", "anchor", "description")


def parse_property(text: str, source: str = "<string>") -> PropertySpec:
    """Read one property from the pattern-file format.

    Header lines ``name:``, ``kind:``, ``anchor:`` and optionally
    ``description:`` come first; then ``compliance:`` and ``violation:``
    sections hold one pattern per non-blank line. ``#`` starts a comment line.
    """
    headers: dict[str, str] = {}
    sections: dict[str, list[tuple[int, str]]] = {"compliance": [], "violation": []}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rest = line.partition(":")
        if sep and key in sections and not rest.strip():
            current = key
            continue
        if current is None and sep and key in _HEADERS:
            headers[key] = rest.strip()
            continue
        if current is None:
            raise PropertyConfigError(f"{source}:{lineno}: expected a header or section, got {line!r}")
        sections[current].append((lineno, line))
    for h in ("name", "kind", "anchor"):
        if h not in headers:
            raise PropertyConfigError(f"{source}: missing '{h}:' header")

    def parse_all(entries):
        out = []
        for lineno, line in entries:
            try:
                out.append(parse_pattern(line))
            except PatternSyntaxError as e:
                raise PropertyConfigError(f"{source}:{lineno}:{e.col}: {e.message}") from e
        return tuple(out)

    spec = PropertySpec(
        name=headers["name"], kind=headers["kind"], anchor=headers["anchor"],
        compliance=parse_all(sections["compliance"]), violation=parse_all(sections["violation"]),
        description=headers.get("description", ""),
        compliance_text=tuple(l for _, l in sections["compliance"]),
        violation_text=tuple(l for _, l in sections["violation"]),
        source=source,
    )
    if not spec.compliance and not spec.violation:
        raise PropertyConfigError(f"{source}: property {spec.name} has no patterns")
    spec.check_shape()
    return spec


def load_properties(directory: str | Path) -> dict[str, PropertySpec]:
    out = {}
    for path in sorted(Path(directory).glob("*.pattern")):
        spec = parse_property(path.read_text(), str(path))
        if spec.name in out:
            raise PropertyConfigError(f"duplicate property {spec.name} in {path}")
        out[spec.name] = spec
    return out


# -- classification --------------------------------------------------------------

def _unify(atom, row, env=None):
    env = dict(env or {})
    for t, v in zip(atom.terms, row):
        if isinstance(t, PVar):
            if t.name in env and env[t.name] != v:
                return None
            env[t.name] = v
        elif t != v:
            return None
    return env


def _witnesses(env) -> tuple[tuple[str, object], ...]:
    return tuple(sorted(((k, v) for k, v in env.items() if not k.startswith("_")), key=lambda kv: kv[0]))


class _Compiled:
    """A quantified instruction pattern split into its anchor atom and core body."""

    def __init__(self, ast):
        self.atom = ast.atom
        self.body = desugar(ast.body)
        self.ast = ast


def classify_property(spec: PropertySpec, ctx: FactContext) -> PropertyVerdict:
    ev = Evaluator(ctx)
    if spec.kind == "contract":
        return _classify_contract(spec, ev)
    viols = [_Compiled(a) for a in spec.violation]
    comps = [_Compiled(a) for a in spec.compliance]
    result = PropertyVerdict(spec.name, spec.kind, Verdict.COMPLIANT)
    rows = sorted(ctx.relations.get(spec.anchor, ()), key=lambda r: _label_key(r[0]))
    for row in rows:
        witness = None
        for p in viols:
            env = _unify(p.atom, row)
            if env is None:
                continue
            sol = next(ev.solutions(p.body, env), None)
            if sol is not None:
                witness = sol
                break
        compliant = False
        for p in comps:
            env = _unify(p.atom, row)
            if env is not None and ev.holds(p.body, env):
                compliant = True
                break
        if witness is not None:
            if compliant:
                msg = f"{spec.name}: {row[0]} matches both the violation and the compliance pattern"
                log.warning(msg)
                result.diagnostics.append(msg)
            verdict = Verdict.VIOLATION
        elif compliant:
            verdict = Verdict.COMPLIANT
        else:
            verdict = Verdict.WARNING
        result.findings.append(Finding(row[0], spec.anchor, verdict, _witnesses(witness or {})))
    verdicts = {f.verdict for f in result.findings}
    if Verdict.VIOLATION in verdicts:
        result.verdict = Verdict.VIOLATION
    elif Verdict.WARNING in verdicts:
        result.verdict = Verdict.WARNING
    return result


def _classify_contract(spec: PropertySpec, ev: Evaluator) -> PropertyVerdict:
    witness = None
    for ast in spec.violation:
        witness = next(ev.solutions(desugar(ast)), None)
        if witness is not None:
            break
    compliant = any(ev.holds(desugar(a)) for a in spec.compliance)
    result = PropertyVerdict(spec.name, spec.kind, Verdict.WARNING)
    if witness is not None:
        result.verdict = Verdict.VIOLATION
        result.witnesses = _witnesses(witness)
        if compliant:
            msg = f"{spec.name}: contract matches both the violation and the compliance pattern"
            log.warning(msg)
            result.diagnostics.append(msg)
    elif compliant:
        result.verdict = Verdict.COMPLIANT
    return result


def classify(props, ctx: FactContext) -> list[PropertyVerdict]:
    return [classify_property(p, ctx) for p in props]


def _label_key(label: str):
    digits = "".join(ch for ch in label[1:].split("_")[0] if ch.isdigit())
    return (int(digits) if digits else -1, label)
