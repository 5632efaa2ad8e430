"""Pattern syntax trees.

Core nodes (what :func:`evmsec.dsl.desugar.desugar` produces): :class:`Atom`,
:class:`Exists`, :class:`Not`, :class:`And`. The rest is surface sugar.
Terms are :class:`PVar` (a pattern variable) or plain constants: ``int`` for
numbers and ``str`` for tag names, label literals and ``top``.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class PVar:
    name: str
    anonymous: bool = False

    def __str__(self) -> str:
        return "_" if self.anonymous else self.name


@dataclass(frozen=True)
class Binder:
    name: str
    sort: str | None = None  # label | var | tag | None (inferred)

    def __str__(self) -> str:
        return self.name if self.sort is None else f"{self.name}:{self.sort}"


def show_term(t) -> str:
    return str(t)


@dataclass(frozen=True)
class Atom:
    """An instruction atom (``instr``) or a semantic predicate."""

    pred: str
    terms: tuple
    instr: bool = False

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(show_term(t) for t in self.terms)})"


@dataclass(frozen=True)
class Exists:
    binders: tuple[Binder, ...]
    body: object

    def __str__(self) -> str:
        if isinstance(self.body, Atom) and self._wildcards_only():
            return str(self.body)  # written with '_' in the source
        return f"(exists {', '.join(map(str, self.binders))}. {self.body})"

    def _wildcards_only(self) -> bool:
        anon = {t.name for t in self.body.terms if isinstance(t, PVar) and t.anonymous}
        return bool(anon) and {b.name for b in self.binders} == anon


@dataclass(frozen=True)
class Not:
    body: object

    def __str__(self) -> str:
        return f"!{self.body}"


@dataclass(frozen=True)
class And:
    left: object
    right: object

    def __str__(self) -> str:
        return f"({self.left} && {self.right})"


# -- sugar -------------------------------------------------------------------

@dataclass(frozen=True)
class ForAll:
    binders: tuple[Binder, ...]
    body: object

    def __str__(self) -> str:
        return f"(forall {', '.join(map(str, self.binders))}. {self.body})"


@dataclass(frozen=True)
class Or:
    left: object
    right: object

    def __str__(self) -> str:
        return f"({self.left} || {self.right})"


@dataclass(frozen=True)
class Implies:
    left: object
    right: object

    def __str__(self) -> str:
        return f"({self.left} => {self.right})"


@dataclass(frozen=True)
class Cmp:
    """``left = right`` or ``left != right``."""

    left: object
    right: object
    negated: bool = False

    def __str__(self) -> str:
        return f"{show_term(self.left)} {'!=' if self.negated else '='} {show_term(self.right)}"


@dataclass(frozen=True)
class SomeInstr:
    """``some instr(..). body``; ``binders`` are the atom variables it introduces."""

    atom: Atom
    binders: tuple[Binder, ...]
    body: object

    def __str__(self) -> str:
        return f"(some {self.atom}. {self.body})"


@dataclass(frozen=True)
class AllInstr:
    atom: Atom
    binders: tuple[Binder, ...]
    body: object

    def __str__(self) -> str:
        return f"(all {self.atom}. {self.body})"


CORE = (Atom, Exists, Not, And)


def children(node) -> tuple:
    if isinstance(node, Atom):
        return ()
    if isinstance(node, (Exists, ForAll, Not)):
        return (node.body,)
    if isinstance(node, (SomeInstr, AllInstr)):
        return (node.atom, node.body)
    if isinstance(node, Cmp):
        return ()
    return (node.left, node.right)


def free_vars(node) -> set[str]:
    """Names of pattern variables not bound inside ``node``."""
    if isinstance(node, Atom):
        return {t.name for t in node.terms if isinstance(t, PVar)}
    if isinstance(node, Cmp):
        return {t.name for t in (node.left, node.right) if isinstance(t, PVar)}
    if isinstance(node, (Exists, ForAll)):
        return free_vars(node.body) - {b.name for b in node.binders}
    if isinstance(node, (SomeInstr, AllInstr)):
        return (free_vars(node.atom) | free_vars(node.body)) - {b.name for b in node.binders}
    if isinstance(node, Not):
        return free_vars(node.body)
    return free_vars(node.left) | free_vars(node.right)


def is_core(node) -> bool:
    return isinstance(node, CORE) and all(is_core(c) for c in children(node))
