"""Backtracking evaluation of core patterns over a fact model.

A pattern is solved as a list of goals under a partial binding. Positive
atoms generate bindings through indexed lookups; negations and closed atoms
are checked once their variables are bound; a variable that no positive
atom can bind is enumerated over the finite universe of its sort.

``Eq(a, b)`` is true when ``a`` and ``b`` are the same value or when the
model derives ``Eq(a, b)``; this is how ``X = T`` and ``L3 != L4`` compare
labels and constants, which the model never relates by ``Eq`` facts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from ..analysis.facts import TAG_KINDS, TOP
from .ast import And, Atom, Binder, Exists, Not, PVar, free_vars
from .desugar import desugar, substitute

LABEL_PREDS = {"Follow": (0, 1), "MayFollow": (0, 1), "MustFollow": (0, 1)}
TAG_PREDS = ("Eq", "DetBy", "MayDepOn")


class PatternEvaluationError(RuntimeError):
    pass


@dataclass
class FactContext:
    """What a pattern is evaluated against: relations plus per-sort universes."""

    relations: dict[str, set[tuple]]
    labels: frozenset = frozenset()
    values: frozenset = frozenset()
    tags: frozenset = frozenset()
    _index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_model(cls, sem) -> "FactContext":
        """Build from a :class:`~evmsec.analysis.SemanticModel`."""
        rels = {p: sem.model.relation(p).tuples for p in sem.model.predicates()}
        tags = set(TAG_KINDS)
        for p in TAG_PREDS:
            tags.update(t[1] for t in rels.get(p, ()))
        values = set(sem.vars) | set(sem.consts) | {TOP}
        return cls(rels, frozenset(sem.labels), frozenset(values), frozenset(tags))

    def universe(self, sort: str | None) -> Iterable:
        if sort == "label":
            return self.labels
        if sort == "var":
            return self.values
        if sort == "tag":
            return self.tags
        return self.labels | self.values | self.tags

    def lookup(self, pred: str, bound: dict[int, object]) -> Iterable[tuple]:
        rows = self.relations.get(pred)
        if not rows:
            return ()
        if not bound:
            return rows
        key_pos = tuple(sorted(bound))
        idx = self._index.get((pred, key_pos))
        if idx is None:
            idx = {}
            for t in rows:
                idx.setdefault(tuple(t[i] for i in key_pos), []).append(t)
            self._index[(pred, key_pos)] = idx
        return idx.get(tuple(bound[i] for i in key_pos), ())

    def holds(self, pred: str, args: tuple) -> bool:
        rows = self.relations.get(pred)
        return bool(rows) and tuple(args) in rows

    def size(self, pred: str) -> int:
        return len(self.relations.get(pred, ()))


def _term_sorts(node, name: str, out: set):
    if isinstance(node, Atom):
        for i, t in enumerate(node.terms):
            if isinstance(t, PVar) and t.name == name:
                out.add(_position_sort(node, i))
        return
    if isinstance(node, Exists):
        if name not in {b.name for b in node.binders}:
            _term_sorts(node.body, name, out)
        return
    if isinstance(node, Not):
        _term_sorts(node.body, name, out)
        return
    if isinstance(node, And):
        _term_sorts(node.left, name, out)
        _term_sorts(node.right, name, out)


def _position_sort(atom: Atom, i: int) -> str | None:
    if atom.instr:
        if i == 0 or (atom.pred in ("goto", "dispatch") and i == 2):
            return "label"
        return "var"
    if atom.pred in LABEL_PREDS:
        return "label"
    if atom.pred in TAG_PREDS:
        return "tag" if i == 1 else None
    return "var"


def infer_sort(name: str, body) -> str | None:
    sorts: set = set()
    _term_sorts(body, name, sorts)
    if len(sorts) == 1:
        return next(iter(sorts))
    return None


class Evaluator:
    def __init__(self, ctx: FactContext):
        self.ctx = ctx

    # -- public
    def solutions(self, node, env: dict | None = None) -> Iterator[dict]:
        """All bindings (extending ``env``) under which the core ``node`` holds."""
        yield from self._solve([node], dict(env or {}), {})

    def holds(self, node, env: dict | None = None) -> bool:
        return next(self.solutions(node, env), None) is not None

    # -- atoms
    def _value(self, t, env):
        if isinstance(t, PVar):
            return env.get(t.name, _UNBOUND)
        return t

    def _atom_matches(self, atom: Atom, env: dict) -> Iterator[dict]:
        vals = [self._value(t, env) for t in atom.terms]
        if atom.pred == "Eq" and not atom.instr:
            yield from self._eq_matches(atom, vals, env)
            return
        bound = {i: v for i, v in enumerate(vals) if v is not _UNBOUND}
        if len(bound) == len(vals):
            if self.ctx.holds(atom.pred, tuple(vals)):
                yield env
            return
        for row in self.ctx.lookup(atom.pred, bound):
            new = dict(env)
            ok = True
            for i, t in enumerate(atom.terms):
                if vals[i] is _UNBOUND:
                    prev = new.get(t.name, _UNBOUND)
                    if prev is _UNBOUND:
                        new[t.name] = row[i]
                    elif prev != row[i]:
                        ok = False
                        break
            if ok:
                yield new

    def _eq_matches(self, atom, vals, env):
        a, b = vals
        if a is not _UNBOUND and b is not _UNBOUND:
            if a == b or self.ctx.holds("Eq", (a, b)):
                yield env
            return
        if a is _UNBOUND and b is _UNBOUND:
            raise PatternEvaluationError("Eq with both sides unbound")  # scheduled last; see _pick
        if a is _UNBOUND:
            cands = {b} | {r[0] for r in self.ctx.lookup("Eq", {1: b})}
            name = atom.terms[0].name
        else:
            cands = {a} | {r[1] for r in self.ctx.lookup("Eq", {0: a})}
            name = atom.terms[1].name
        for c in sorted(cands, key=_order):
            new = dict(env)
            new[name] = c
            yield new

    # -- goal scheduling
    def _pick(self, goals, env, pending) -> tuple[int, object]:
        """Choose the next goal: checks first, then the most selective generator."""
        best, best_cost = None, None
        for i, g in enumerate(goals):
            if isinstance(g, (And, Exists)):
                return i, "expand"
            fv = {n for n in free_vars(g) if n not in env}
            if not fv:
                return i, "check"
            if isinstance(g, Atom):
                if g.pred == "Eq" and not g.instr:
                    if all(isinstance(t, PVar) and t.name in fv for t in g.terms):
                        continue
                    cost = 1
                else:
                    nb = sum(1 for t in g.terms if not (isinstance(t, PVar) and t.name in fv))
                    cost = self.ctx.size(g.pred) / (1 + 10 * nb)
                if best_cost is None or cost < best_cost:
                    best, best_cost = i, cost
        if best is not None:
            return best, "generate"
        return -1, "enumerate"

    def _solve(self, goals: list, env: dict, pending: dict[str, str | None]) -> Iterator[dict]:
        if not goals:
            yield env
            return
        i, how = self._pick(goals, env, pending)
        if how == "enumerate":
            # some variable is used only in negations or unbindable atoms
            fv = sorted({n for g in goals for n in free_vars(g)} - set(env))
            name = fv[0]
            if name not in pending:
                raise PatternEvaluationError(f"unbound pattern variable {name}")
            sort = pending[name]
            if sort is None:
                sort = infer_sort(name, _conj(goals))
            for v in sorted(self.ctx.universe(sort), key=_order):
                new = dict(env)
                new[name] = v
                yield from self._solve(goals, new, pending)
            return
        goal = goals[i]
        rest = goals[:i] + goals[i + 1:]
        if how == "expand":
            if isinstance(goal, And):
                yield from self._solve([goal.left, goal.right] + rest, env, pending)
                return
            binders, body = self._open(goal, env, pending, rest)
            new_pending = dict(pending)
            for b in binders:
                new_pending[b.name] = b.sort
            yield from self._solve([body] + rest, env, new_pending)
            return
        if how == "check":
            if self._check(goal, env):
                yield from self._solve(rest, env, pending)
            return
        for new in self._atom_matches(goal, env):
            yield from self._solve(rest, new, pending)

    def _open(self, goal: Exists, env, pending, rest):
        """Bring an existential's binders into the current goal list, renaming on clash."""
        taken = set(env) | set(pending) | {n for g in rest for n in free_vars(g)}
        binders, mapping = [], {}
        for b in goal.binders:
            name = b.name
            if name in taken:
                k = 1
                while f"{name}'{k}" in taken:
                    k += 1
                name = f"{name}'{k}"
                mapping[b.name] = PVar(name)
            taken.add(name)
            binders.append(Binder(name, b.sort))
        body = substitute(goal.body, mapping) if mapping else goal.body
        return binders, body

    def _check(self, goal, env) -> bool:
        if isinstance(goal, Not):
            return not self.holds(goal.body, env)
        if isinstance(goal, Atom):
            return next(self._atom_matches(goal, env), None) is not None
        return self.holds(goal, env)


def _conj(goals):
    node = goals[0]
    for g in goals[1:]:
        node = And(node, g)
    return node


class _Unbound:
    def __repr__(self):
        return "<unbound>"


_UNBOUND = _Unbound()


def _order(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, str(v))


def evaluate(pattern, ctx: FactContext, env: dict | None = None) -> tuple[bool, dict | None]:
    """Truth value of a (possibly sugared) closed pattern, with the first witness."""
    core = desugar(pattern)
    sol = next(Evaluator(ctx).solutions(core, env), None)
    return sol is not None, sol
