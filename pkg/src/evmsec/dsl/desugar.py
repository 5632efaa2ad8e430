"""Rewrite surface patterns into the core language (exists, not, and, atoms)."""

from __future__ import annotations

from .ast import (
    AllInstr, And, Atom, Binder, Cmp, Exists, ForAll, Implies, Not, Or, PVar, SomeInstr, free_vars,
)


def desugar(node):
    return _desugar(node, frozenset())


def _fresh(name: str, taken) -> str:
    i = 1
    while f"{name}_{i}" in taken:
        i += 1
    return f"{name}_{i}"


def _bind(binders, body, scope):
    """Rename binders that would shadow an enclosing one."""
    out, renames = [], {}
    names = set(scope) | free_vars(body)
    for b in binders:
        if b.name in scope:
            new = _fresh(b.name, names)
            names.add(new)
            renames[b.name] = new
            out.append(Binder(new, b.sort))
        else:
            out.append(b)
    if renames:
        body = substitute(body, {k: PVar(v) for k, v in renames.items()})
    return tuple(out), body


def _desugar(node, scope):
    if isinstance(node, Atom):
        return node
    if isinstance(node, Cmp):
        eq = Atom("Eq", (node.left, node.right))
        return Not(eq) if node.negated else eq
    if isinstance(node, Not):
        return Not(_desugar(node.body, scope))
    if isinstance(node, And):
        return And(_desugar(node.left, scope), _desugar(node.right, scope))
    if isinstance(node, Or):
        return Not(And(Not(_desugar(node.left, scope)), Not(_desugar(node.right, scope))))
    if isinstance(node, Implies):
        return Not(And(_desugar(node.left, scope), Not(_desugar(node.right, scope))))
    if isinstance(node, (Exists, ForAll)):
        binders, body = _bind(node.binders, node.body, scope)
        inner = _desugar(body, scope | {b.name for b in binders})
        if isinstance(node, Exists):
            return Exists(binders, inner)
        return Not(Exists(binders, Not(inner)))
    if isinstance(node, (SomeInstr, AllInstr)):
        binders, conj = _bind(node.binders, And(node.atom, node.body), scope)
        atom = conj.left
        inner_scope = scope | {b.name for b in binders}
        body = _desugar(conj.right, inner_scope)
        if isinstance(node, SomeInstr):
            core = And(atom, body)
            return Exists(binders, core) if binders else core
        core = And(atom, Not(body))
        return Not(Exists(binders, core) if binders else core)
    raise TypeError(f"not a pattern node: {node!r}")


def substitute(node, mapping: dict[str, object]):
    """Replace free occurrences of pattern variables by terms."""
    def term(t):
        return mapping.get(t.name, t) if isinstance(t, PVar) else t

    if isinstance(node, Atom):
        return Atom(node.pred, tuple(term(t) for t in node.terms), node.instr)
    if isinstance(node, Cmp):
        return Cmp(term(node.left), term(node.right), node.negated)
    if isinstance(node, Not):
        return Not(substitute(node.body, mapping))
    if isinstance(node, (And, Or, Implies)):
        return type(node)(substitute(node.left, mapping), substitute(node.right, mapping))
    if isinstance(node, (Exists, ForAll)):
        inner = {k: v for k, v in mapping.items() if k not in {b.name for b in node.binders}}
        return type(node)(node.binders, substitute(node.body, inner))
    if isinstance(node, (SomeInstr, AllInstr)):
        inner = {k: v for k, v in mapping.items() if k not in {b.name for b in node.binders}}
        return type(node)(substitute(node.atom, inner), node.binders, substitute(node.body, inner))
    raise TypeError(f"not a pattern node: {node!r}")
