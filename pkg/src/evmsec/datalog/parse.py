"""Text format for rules: ``head :- lit, ..., !lit.``

Identifiers starting with an uppercase letter or ``_`` are variables (a
lone ``_`` is a fresh anonymous variable); lowercase identifiers, integers
and double-quoted strings are constants. ``#`` and ``%`` start comments.
"""

from __future__ import annotations

import re

from .terms import Atom, Literal, Program, Rule, Variable


class DatalogSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line, self.col = line, col


_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r\n]+)|(?P<comment>[#%][^\n]*)
      |(?P<implies>:-)|(?P<num>0x[0-9a-fA-F]+|\d+)
      |(?P<str>"(?:[^"\\]|\\.)*")|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      |(?P<punct>[(),.!])""",
    re.VERBOSE,
)


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DatalogSyntaxError(f"unexpected {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind not in ("ws", "comment"):
            yield kind, val, line, m.start() - line_start + 1
        nl = val.count("\n")
        if nl:
            line += nl
            line_start = m.start() + val.rindex("\n") + 1
        pos = m.end()
    yield "eof", "", line, pos - line_start + 1


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokenize(text))
        self.i = 0
        self.anon = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, val):
        kind, v, line, col = self.next()
        if v != val:
            raise DatalogSyntaxError(f"expected {val!r}, got {v or 'end of input'!r}", line, col)

    def term(self):
        kind, v, line, col = self.next()
        if kind == "num":
            return int(v, 0)
        if kind == "str":
            return bytes(v[1:-1], "utf-8").decode("unicode_escape")
        if kind == "ident":
            if v == "_":
                self.anon += 1
                return Variable(f"_{self.anon}", anonymous=True)
            if v[0].isupper() or v[0] == "_":
                return Variable(v)
            return v
        raise DatalogSyntaxError(f"expected a term, got {v!r}", line, col)

    def atom(self) -> Atom:
        kind, v, line, col = self.next()
        if kind != "ident":
            raise DatalogSyntaxError(f"expected predicate name, got {v!r}", line, col)
        terms = []
        if self.peek()[1] == "(":
            self.next()
            if self.peek()[1] != ")":
                terms.append(self.term())
                while self.peek()[1] == ",":
                    self.next()
                    terms.append(self.term())
            self.expect(")")
        return Atom(v, tuple(terms))

    def literal(self) -> Literal:
        if self.peek()[1] == "!":
            self.next()
            return Literal(self.atom(), False)
        return Literal(self.atom())

    def rule(self) -> Rule:
        self.anon = 0
        head = self.atom()
        body = []
        if self.peek()[0] == "implies":
            self.next()
            body.append(self.literal())
            while self.peek()[1] == ",":
                self.next()
                body.append(self.literal())
        self.expect(".")
        return Rule(head, tuple(body))

    def program(self) -> list[Rule]:
        rules = []
        while self.peek()[0] != "eof":
            rules.append(self.rule())
        return rules


def parse_rules(text: str) -> list[Rule]:
    return _Parser(text).program()


def parse_program(text: str, edb=()) -> Program:
    return Program(tuple(parse_rules(text)), frozenset(edb))


def parse_atom(text: str) -> Atom:
    p = _Parser(text)
    atom = p.atom()
    if p.peek()[0] != "eof":
        _, v, line, col = p.peek()
        raise DatalogSyntaxError(f"trailing {v!r}", line, col)
    return atom
