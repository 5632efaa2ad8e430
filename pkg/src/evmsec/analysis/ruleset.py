"""The built-in inference rules, loaded from ``rules.dl`` plus generated operand rules."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from ..datalog import CompiledProgram, Program, parse_rules
from ..datalog.terms import Atom, Literal, Rule, Variable
from ..opcodes import OPCODES
from .facts import FACT_ARGS

# EVM opcodes that do not become an SSA instruction of their own name
_NOT_SSA = ("PUSH", "DUP", "SWAP")


def result_signatures() -> dict[str, int]:
    """SSA opcodes that produce a value, mapped to their number of fact operands."""
    sigs = {}
    for info in OPCODES.values():
        if info.pushes != 1 or info.name.startswith(_NOT_SSA) or info.name == "PC":
            continue
        op = info.name.lower()
        sigs[op] = len(FACT_ARGS[op]) if op in FACT_ARGS else info.pops
    return sigs


_HALTS = {"STOP": "stop", "RETURN": "return", "REVERT": "revert", "INVALID": "throw",
          "SELFDESTRUCT": "selfdestruct"}


@lru_cache(maxsize=1)
def instruction_signatures() -> dict[str, int]:
    """Arity of every instruction fact predicate (label and result included)."""
    sigs = {op: n + 2 for op, n in result_signatures().items()}
    for info in OPCODES.values():
        if info.pushes or info.name in ("JUMP", "JUMPI", "POP") or info.name.startswith(_NOT_SSA):
            continue
        sigs[_HALTS.get(info.name, info.name.lower())] = info.pops + 1
    sigs.update(assign=3, goto=3, dispatch=3, jumpdest=1, throw=1)
    return sigs


def operand_rules() -> list[Rule]:
    """``MayDepOn(Y, T) :- op(_, Y, .., X, ..), MayDepOn(X, T)`` for each operand position."""
    rules = []
    L, Y, X, T = Variable("_L", True), Variable("Y"), Variable("X"), Variable("T")
    for op, n in sorted(result_signatures().items()):
        for i in range(n):
            terms = [L, Y] + [Variable(f"_A{j}", True) for j in range(n)]
            terms[2 + i] = X
            rules.append(Rule(Atom("MayDepOn", (Y, T)),
                              (Literal(Atom(op, tuple(terms))), Literal(Atom("MayDepOn", (X, T))))))
    return rules


def rules_text() -> str:
    return resources.files(__package__).joinpath("rules.dl").read_text()


@lru_cache(maxsize=1)
def builtin_ruleset() -> CompiledProgram:
    rules = tuple(parse_rules(rules_text())) + tuple(operand_rules())
    return CompiledProgram(Program(rules))
