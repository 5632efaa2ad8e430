"""Concrete syntax for security patterns.

Precedence, loosest first: ``=>`` (right associative), ``||``, ``&&``, ``!``.
A quantifier body (``some``, ``all``, ``exists``, ``forall``) extends as far
right as possible, so parenthesize a quantified conjunct that is followed by
more conjuncts. See ``grammar.ebnf`` next to this module for the full grammar.
"""

from __future__ import annotations

import re

from ..analysis.ruleset import instruction_signatures
from .ast import AllInstr, And, Atom, Binder, Cmp, Exists, ForAll, Implies, Not, Or, PVar, SomeInstr

SEMANTIC = {
    "Eq": 2, "DetBy": 2, "MayDepOn": 2, "MayFollow": 2, "MustFollow": 2, "Follow": 2, "isConst": 1,
}
SORTS = ("label", "var", "tag")
KEYWORDS = {"some", "all", "exists", "forall"}


class PatternSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message, self.line, self.col = message, line, col


_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r\n]+)|(?P<comment>\#[^\n]*)
      |(?P<op>&&|\|\||=>|!=|[(),.:!=])
      |(?P<num>0x[0-9a-fA-F]+|\d+)
      |(?P<ident>[A-Za-z_][A-Za-z0-9_]*)""",
    re.VERBOSE,
)


def tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PatternSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind, val = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            out.append((kind, val, line, m.start() - line_start + 1))
        if "\n" in val:
            line += val.count("\n")
            line_start = m.start() + val.rindex("\n") + 1
        pos = m.end()
    out.append(("eof", "", line, pos - line_start + 1))
    return out


def is_variable_name(name: str) -> bool:
    return name[0].isupper() or name[0] == "_"


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.fresh = 0
        self.instrs = instruction_signatures()

    # -- token helpers
    def peek(self, k=0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg, tok=None):
        _, _, line, col = tok or self.peek()
        raise PatternSyntaxError(msg, line, col)

    def expect(self, val):
        tok = self.next()
        if tok[1] != val:
            self.error(f"expected {val!r}, got {tok[1] or 'end of input'!r}", tok)
        return tok

    def anon(self) -> PVar:
        self.fresh += 1
        return PVar(f"_{self.fresh}", anonymous=True)

    # -- grammar
    def formula(self, scope):
        left = self.disj(scope)
        if self.peek()[1] == "=>":
            self.next()
            return Implies(left, self.formula(scope))
        return left

    def disj(self, scope):
        node = self.conj(scope)
        while self.peek()[1] == "||":
            self.next()
            node = Or(node, self.conj(scope))
        return node

    def conj(self, scope):
        node = self.unary(scope)
        while self.peek()[1] == "&&":
            self.next()
            node = And(node, self.unary(scope))
        return node

    def unary(self, scope):
        kind, val, _, _ = self.peek()
        if val == "!":
            self.next()
            return Not(self.unary(scope))
        if kind == "ident" and val in KEYWORDS:
            return self.quantified(scope)
        return self.primary(scope)

    def quantified(self, scope):
        kw = self.next()[1]
        if kw in ("some", "all"):
            tok = self.peek()
            atom, wild = self.atom(scope, binding=True)
            if not atom.instr:
                self.error(f"'{kw}' needs an instruction, got predicate {atom.pred}", tok)
            names = {t.name for t in atom.terms if isinstance(t, PVar)}
            binders = tuple(Binder(n) for n in sorted(names - scope))
            self.expect(".")
            body = self.formula(scope | names)
            cls = SomeInstr if kw == "some" else AllInstr
            return cls(atom, binders, body)
        binders = [self.binder()]
        while self.peek()[1] == ",":
            self.next()
            binders.append(self.binder())
        self.expect(".")
        body = self.formula(scope | {b.name for b in binders})
        return (Exists if kw == "exists" else ForAll)(tuple(binders), body)

    def binder(self) -> Binder:
        tok = self.next()
        if tok[0] != "ident" or not is_variable_name(tok[1]) or tok[1] == "_":
            self.error(f"expected a variable to quantify, got {tok[1]!r}", tok)
        sort = None
        if self.peek()[1] == ":":
            self.next()
            s = self.next()
            if s[1] not in SORTS:
                self.error(f"unknown sort {s[1]!r} (expected one of {', '.join(SORTS)})", s)
            sort = s[1]
        return Binder(tok[1], sort)

    def primary(self, scope):
        kind, val, _, _ = self.peek()
        if val == "(":
            self.next()
            node = self.formula(scope)
            self.expect(")")
            return node
        if kind == "ident" and self.peek(1)[1] == "(":
            tok = self.peek()
            atom, wild = self.atom(scope, binding=False)
            if wild:
                if atom.instr:
                    self.error(f"wildcard in instruction {atom.pred} outside some/all", tok)
                return Exists(tuple(Binder(w.name) for w in wild), atom)
            return atom
        left = self.term(scope)
        op = self.next()
        if op[1] not in ("=", "!="):
            self.error(f"expected '=' or '!=' after term, got {op[1] or 'end of input'!r}", op)
        right = self.term(scope)
        if isinstance(left, PVar) and left.anonymous or isinstance(right, PVar) and right.anonymous:
            self.error("wildcard not allowed in a comparison", op)
        return Cmp(left, right, op[1] == "!=")

    def atom(self, scope, binding: bool):
        tok = self.next()
        name = tok[1]
        if tok[0] != "ident":
            self.error(f"expected a predicate or instruction name, got {name or 'end of input'!r}", tok)
        if name in SEMANTIC:
            arity, instr = SEMANTIC[name], False
        elif name in self.instrs:
            arity, instr = self.instrs[name], True
        else:
            self.error(f"unknown predicate {name!r}", tok)
        self.expect("(")
        terms, wild = [], []
        if self.peek()[1] != ")":
            while True:
                t = self.term(scope, allow_free=binding)
                if isinstance(t, PVar) and t.anonymous:
                    wild.append(t)
                terms.append(t)
                if self.peek()[1] != ",":
                    break
                self.next()
        self.expect(")")
        if len(terms) != arity:
            self.error(f"{name} takes {arity} arguments, got {len(terms)}", tok)
        return Atom(name, tuple(terms), instr), wild

    def term(self, scope, allow_free=False):
        tok = self.next()
        kind, val = tok[0], tok[1]
        if kind == "num":
            return int(val, 0)
        if kind != "ident" or val in KEYWORDS:
            self.error(f"expected a term, got {val or 'end of input'!r}", tok)
        if val == "_":
            return self.anon()
        if is_variable_name(val):
            if val not in scope and not allow_free:
                self.error(f"unbound variable {val}", tok)
            return PVar(val)
        return val

    def parse(self):
        node = self.formula(frozenset())
        if self.peek()[0] != "eof":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node


def parse_pattern(text: str):
    """Parse one pattern expression; raises :class:`PatternSyntaxError`."""
    if not text.strip():
        raise PatternSyntaxError("empty pattern", 1, 1)
    return _Parser(text).parse()
