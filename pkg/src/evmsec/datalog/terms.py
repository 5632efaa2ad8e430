"""Datalog syntax: variables, atoms, literals, rules, programs.

Constants are plain Python values (ints and strings); only
:class:`Variable` instances are variables, so the two never collide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


@dataclass(frozen=True, order=True)
class Variable:
    name: str
    anonymous: bool = field(default=False, compare=False)

    def __str__(self) -> str:
        return "_" if self.anonymous else self.name


def is_var(t) -> bool:
    return isinstance(t, Variable)


def format_const(c) -> str:
    if isinstance(c, int):
        return str(c)
    text = str(c)
    if text and (text[0].islower()) and text.replace("_", "").isalnum():
        return text
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


@dataclass(frozen=True)
class Atom:
    pred: str
    terms: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> list[Variable]:
        return [t for t in self.terms if isinstance(t, Variable)]

    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.terms)

    def __str__(self) -> str:
        inner = ", ".join(str(t) if isinstance(t, Variable) else format_const(t) for t in self.terms)
        return f"{self.pred}({inner})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self) -> str:
        return str(self.atom) if self.positive else f"!{self.atom}"


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple[Literal, ...] = ()

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(l) for l in self.body)}."


@dataclass(frozen=True)
class Program:
    rules: tuple[Rule, ...]
    edb: frozenset[str] = frozenset()

    def __add__(self, other: "Program") -> "Program":
        return Program(self.rules + other.rules, self.edb | other.edb)

    @property
    def idb(self) -> frozenset[str]:
        return frozenset(r.head.pred for r in self.rules)

    def predicates(self) -> set[str]:
        preds = set(self.edb)
        for r in self.rules:
            preds.add(r.head.pred)
            preds.update(l.atom.pred for l in r.body)
        return preds

    def extensional(self) -> frozenset[str]:
        return frozenset(self.predicates() - self.idb)

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.rules)


class Fact(NamedTuple):
    pred: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.pred}({','.join(format_const(a) for a in self.args)})"


def as_fact_map(facts) -> dict[str, set[tuple]]:
    """Normalize facts given as a mapping pred -> tuples or an iterable of facts/atoms."""
    out: dict[str, set[tuple]] = {}
    if isinstance(facts, dict):
        for pred, rows in facts.items():
            out.setdefault(pred, set()).update(tuple(r) for r in rows)
        return out
    for f in facts:
        if isinstance(f, Atom):
            pred, args = f.pred, f.terms
        else:
            pred, args = f
        out.setdefault(pred, set()).add(tuple(args))
    return out


def facts_of(fact_map: dict[str, Iterable[tuple]]) -> list[Fact]:
    return [Fact(p, t) for p, rows in fact_map.items() for t in rows]
