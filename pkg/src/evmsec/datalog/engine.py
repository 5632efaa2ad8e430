"""Semi-naive bottom-up evaluation of stratified programs.

Each rule is compiled (once per choice of delta literal) into a small
Python function of nested loops over index lookups. Relations keep lazily
built hash indexes keyed by any subset of argument positions.
"""

from __future__ import annotations

import logging
from typing import Iterable

from .stratify import Stratification, StratificationError, check_well_formed, stratify
from .terms import Atom, Program, Rule, Variable, as_fact_map, format_const

log = logging.getLogger(__name__)

DEFAULT_MAX_FACTS = 10_000_000


class IntensionalInputError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


class IllFormedProgramError(ValueError):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


class Relation:
    __slots__ = ("arity", "tuples", "indexes")

    def __init__(self, arity: int):
        self.arity = arity
        self.tuples: set[tuple] = set()
        self.indexes: dict[tuple[int, ...], dict[tuple, list[tuple]]] = {}

    def add(self, t: tuple) -> bool:
        if t in self.tuples:
            return False
        self.tuples.add(t)
        for positions, index in self.indexes.items():
            key = tuple(t[p] for p in positions)
            bucket = index.get(key)
            if bucket is None:
                index[key] = [t]
            else:
                bucket.append(t)
        return True

    def index(self, positions: tuple[int, ...]) -> dict[tuple, list[tuple]]:
        idx = self.indexes.get(positions)
        if idx is None:
            idx = {}
            for t in self.tuples:
                idx.setdefault(tuple(t[p] for p in positions), []).append(t)
            self.indexes[positions] = idx
        return idx

    def lookup(self, bound: dict[int, object]) -> Iterable[tuple]:
        if not bound:
            return self.tuples
        if len(bound) == self.arity:
            t = tuple(bound[i] for i in range(self.arity))
            return (t,) if t in self.tuples else ()
        positions = tuple(sorted(bound))
        return self.index(positions).get(tuple(bound[p] for p in positions), ())

    def __len__(self) -> int:
        return len(self.tuples)


# -- rule compilation ------------------------------------------------------------


def _plan_order(rule: Rule, delta_pos: int | None) -> list[int]:
    """Order body literals: delta first, then greedily the most-bound positive literal."""
    pos_idx = [i for i, l in enumerate(rule.body) if l.positive]
    neg_idx = [i for i, l in enumerate(rule.body) if not l.positive]
    bound: set[str] = set()
    order: list[int] = []
    remaining = list(pos_idx)

    def bind(i):
        for v in rule.body[i].atom.variables():
            bound.add(v.name)

    def flush_negs():
        for j in list(neg_idx):
            if all(v.anonymous or v.name in bound for v in rule.body[j].atom.variables()):
                order.append(j)
                neg_idx.remove(j)

    if delta_pos is not None:
        order.append(delta_pos)
        remaining.remove(delta_pos)
        bind(delta_pos)
    flush_negs()
    while remaining:
        def score(i):
            terms = rule.body[i].atom.terms
            nb = sum(1 for t in terms if not isinstance(t, Variable) or t.name in bound)
            return (nb == len(terms), nb, -i)

        best = max(remaining, key=score)
        remaining.remove(best)
        order.append(best)
        bind(best)
        flush_negs()
    order.extend(neg_idx)
    return order


def _compile(rule: Rule, delta_pos: int | None, name: str):
    """Generate ``fn(rels, delta, out)`` appending head tuples to ``out``."""
    order = _plan_order(rule, delta_pos)
    consts: list[object] = []
    bound: dict[str, str] = {}
    pre: list[str] = []
    body: list[str] = []
    indent = 1

    def const(c) -> str:
        consts.append(c)
        return f"K[{len(consts) - 1}]"

    def emit(line: str):
        body.append("    " * indent + line)

    for step, i in enumerate(order):
        lit = rule.body[i]
        atom = lit.atom
        rel = f"R{step}"
        src = "delta" if (lit.positive and i == delta_pos) else f"rels[{atom.pred!r}]"
        pre.append(f"    {rel} = {src}")
        key_pos, key_exprs = [], []
        for p, t in enumerate(atom.terms):
            if not isinstance(t, Variable):
                key_pos.append(p)
                key_exprs.append(const(t))
            elif t.name in bound:
                key_pos.append(p)
                key_exprs.append(bound[t.name])
        if not lit.positive:
            if len(key_pos) == atom.arity:
                emit(f"if ({', '.join(key_exprs)},) in {rel}.tuples: continue" if indent > 1
                     else f"if ({', '.join(key_exprs)},) in {rel}.tuples: return")
            else:
                pre.append(f"    I{step} = {rel}.index({tuple(key_pos)!r})")
                stop = "continue" if indent > 1 else "return"
                emit(f"if ({', '.join(key_exprs)},) in I{step}: {stop}")
            continue
        tv = f"t{step}"
        if not key_pos:
            emit(f"for {tv} in {rel}.tuples:")
        elif len(key_pos) == atom.arity:
            emit(f"for {tv} in ((({', '.join(key_exprs)},),) if ({', '.join(key_exprs)},) in {rel}.tuples else ()):")
        else:
            pre.append(f"    I{step} = {rel}.index({tuple(key_pos)!r})")
            emit(f"for {tv} in I{step}.get(({', '.join(key_exprs)},), ()):")
        indent += 1
        for p, t in enumerate(atom.terms):
            if isinstance(t, Variable) and p not in key_pos:
                if t.name in bound:
                    emit(f"if {tv}[{p}] != {bound[t.name]}: continue")
                else:
                    var = f"x{len(bound)}"
                    bound[t.name] = var
                    emit(f"{var} = {tv}[{p}]")
    head = []
    for t in rule.head.terms:
        head.append(bound[t.name] if isinstance(t, Variable) else const(t))
    emit(f"out(({', '.join(head)},))" if head else "out(())")
    src = f"def {name}(rels, delta, out):\n" + "\n".join(pre) + "\n" + "\n".join(body) + "\n"
    ns = {"K": consts}
    exec(compile(src, f"<rule {rule}>", "exec"), ns)
    fn = ns[name]
    fn.source = src
    return fn


# -- models ------------------------------------------------------------------------


class Model:
    """Result of evaluation: relations by predicate, read-only once built."""

    def __init__(self, relations: dict[str, Relation], extensional: frozenset[str]):
        self._rels = relations
        self.extensional = extensional
        self.notes: list[str] = []

    def predicates(self) -> list[str]:
        return sorted(self._rels)

    def relation(self, pred: str) -> Relation | None:
        return self._rels.get(pred)

    def facts(self, pred: str) -> frozenset[tuple]:
        rel = self._rels.get(pred)
        return frozenset(rel.tuples) if rel else frozenset()

    def holds(self, pred: str, args: tuple) -> bool:
        rel = self._rels.get(pred)
        return rel is not None and tuple(args) in rel.tuples

    def lookup(self, pred: str, bound: dict[int, object]) -> Iterable[tuple]:
        rel = self._rels.get(pred)
        if rel is None:
            return ()
        return rel.lookup(bound)

    def count(self, pred: str | None = None) -> int:
        if pred is not None:
            rel = self._rels.get(pred)
            return len(rel) if rel else 0
        return sum(len(r) for r in self._rels.values())

    def derived_count(self) -> int:
        return sum(len(r) for p, r in self._rels.items() if p not in self.extensional)

    def query(self, atom: Atom) -> list[dict[str, object]]:
        """All substitutions of the atom's variables that ground it to a fact."""
        rel = self._rels.get(atom.pred)
        if rel is None:
            self.notes.append(f"query on unknown predicate {atom.pred}")
            log.debug("query on unknown predicate %s", atom.pred)
            return []
        if rel.arity != atom.arity:
            self.notes.append(f"arity mismatch querying {atom.pred}")
            return []
        bound = {i: t for i, t in enumerate(atom.terms) if not isinstance(t, Variable)}
        out = []
        seen = set()
        for t in rel.lookup(bound):
            sub: dict[str, object] = {}
            ok = True
            for i, term in enumerate(atom.terms):
                if isinstance(term, Variable) and not term.anonymous:
                    if term.name in sub and sub[term.name] != t[i]:
                        ok = False
                        break
                    sub[term.name] = t[i]
            if ok:
                key = tuple(sorted(sub.items()))
                if key not in seen:
                    seen.add(key)
                    out.append(sub)
        return out

    def as_dict(self) -> dict[str, frozenset[tuple]]:
        return {p: frozenset(r.tuples) for p, r in self._rels.items() if r.tuples}

    def dump(self, preds: Iterable[str] | None = None) -> str:
        """One fact per line, sorted; suitable for golden files."""
        lines = []
        for p in sorted(preds if preds is not None else self._rels):
            rel = self._rels.get(p)
            if rel is None:
                continue
            for t in sorted(rel.tuples, key=sort_key):
                lines.append(f"{p}({','.join(format_const(a) for a in t)})")
        return "\n".join(lines) + ("\n" if lines else "")


def sort_key(t: tuple):
    return tuple((0, a, "") if isinstance(a, int) else (1, 0, str(a)) for a in t)


# -- evaluation ------------------------------------------------------------------


class CompiledProgram:
    """A checked, stratified program with its rule functions compiled."""

    def __init__(self, program: Program):
        diags = check_well_formed(program)
        if diags:
            raise IllFormedProgramError(diags)
        self.program = program
        self.stratification: Stratification = stratify(program)
        self.arity: dict[str, int] = {}
        for r in program.rules:
            for a in [r.head] + [l.atom for l in r.body]:
                self.arity[a.pred] = a.arity
        self._plans = []
        n = 0
        for stratum in self.stratification.strata:
            naive, deltas = [], []
            for rule in stratum.rules:
                n += 1
                naive.append((rule.head.pred, _compile(rule, None, f"r{n}")))
                for i, lit in enumerate(rule.body):
                    if lit.positive and lit.atom.pred in stratum.predicates:
                        n += 1
                        deltas.append((lit.atom.pred, rule.head.pred, _compile(rule, i, f"r{n}")))
            self._plans.append((stratum, naive, deltas))

    def evaluate(self, facts=(), max_facts: int = DEFAULT_MAX_FACTS) -> Model:
        fact_map = as_fact_map(facts)
        idb = self.program.idb
        bad = sorted(set(fact_map) & idb)
        if bad:
            raise IntensionalInputError(f"input facts for intensional predicates: {', '.join(bad)}")
        rels: dict[str, Relation] = {}
        for pred, rows in fact_map.items():
            arity = self.arity.get(pred)
            for t in rows:
                if arity is None:
                    arity = len(t)
                if len(t) != arity:
                    raise ValueError(f"fact {pred}{t} has arity {len(t)}, expected {arity}")
            rel = rels[pred] = Relation(arity if arity is not None else 0)
            rel.tuples.update(rows)
        for pred, arity in self.arity.items():
            rels.setdefault(pred, Relation(arity))
        derived = 0
        for stratum, naive, deltas in self._plans:
            delta: dict[str, Relation] = {p: Relation(rels[p].arity) for p in stratum.predicates}
            for head, fn in naive:
                target = rels[head]
                buf: list[tuple] = []
                fn(rels, None, buf.append)
                for t in buf:
                    if target.add(t):
                        delta[head].add(t)
                        derived += 1
            if derived > max_facts:
                raise ResourceLimitError(f"derived more than {max_facts} facts")
            while deltas and any(len(d) for d in delta.values()):
                new: dict[str, Relation] = {p: Relation(rels[p].arity) for p in stratum.predicates}
                for dpred, head, fn in deltas:
                    d = delta[dpred]
                    if not d.tuples:
                        continue
                    buf = []
                    fn(rels, d, buf.append)
                    target = rels[head]
                    for t in buf:
                        if target.add(t):
                            new[head].add(t)
                            derived += 1
                if derived > max_facts:
                    raise ResourceLimitError(f"derived more than {max_facts} facts")
                delta = new
        return Model(rels, self.program.extensional())


def evaluate(program: Program, facts=(), max_facts: int = DEFAULT_MAX_FACTS) -> Model:
    return CompiledProgram(program).evaluate(facts, max_facts)


def query(model: Model, atom: Atom) -> list[dict[str, object]]:
    return model.query(atom)


__all__ = [
    "CompiledProgram", "IllFormedProgramError", "IntensionalInputError", "Model",
    "Relation", "ResourceLimitError", "StratificationError", "evaluate", "query", "sort_key",
]
