"""Base facts extracted from an SSA control-flow graph.

Instruction facts are named after the SSA opcode and take the form
``op(L, Y, X1..Xn)`` (no ``Y`` for result-less instructions). Labels,
variables, blocks and tags are strings; constants are ints; the unknown
value is the string ``"top"``.

Besides the instruction facts, ``Follow``, ``Join`` and ``isConst``, the
extractor emits structural and source facts the ruleset builds on:

* ``isVar(X)``, ``multidef(X)`` (defined by more than one instruction)
* ``Block(B)``, ``InBlock(L,B)``, ``NextInBlock(L1,L2)``, ``BlockEdge(B1,B2)``,
  ``EntryBlock(B)``, ``EntryLabel(L)``
* ``EqSource(Y,T)``, ``DetSource(Y,T)``, ``Source(Y,T)``: a var read from the
  environment, with equality, determination or mere dependence on tag T
* ``CopyTag(L,T)``: a bulk copy into memory of T-tagged data
* ``Sha3Word(L,O)`` / ``Sha3Any(L)``: words hashed by a sha3 with a constant
  region, or a region that is not constant
* ``Kind(T)``: every source tag kind
* ``dispatch(L,X,L2)``: a selector-dispatch branch; emitted instead of ``goto``
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..datalog.engine import sort_key
from ..datalog.terms import format_const
from ..decompiler.ir import Cfg, Const, SsaInstruction, Var

TOP = "top"

# projection of stack arguments kept in the fact, by opcode
FACT_ARGS = {
    "call": (1, 2),
    "callcode": (1, 2),
    "delegatecall": (1,),
    "staticcall": (1,),
}

EQ_SOURCES = {
    "caller": "caller", "callvalue": "callvalue", "origin": "origin",
    "timestamp": "timestamp", "number": "number", "gaslimit": "gaslimit",
    "coinbase": "coinbase", "difficulty": "difficulty", "chainid": "chainid",
    "basefee": "basefee", "gasprice": "gasprice", "address": "address",
    "selfbalance": "balance", "gas": "gas", "codesize": "codesize",
    "msize": "msize", "returndatasize": "returndatasize", "blobbasefee": "blobbasefee",
}
MAY_SOURCES = {
    "balance": "balance", "sload": "sload", "calldatasize": "data",
    "blockhash": "blockhash", "extcodesize": "extcodesize", "extcodehash": "extcodehash",
    "tload": "tload", "blobhash": "blobhash",
}
MEMORY_OFFSET_OPS = ("mload", "mstore", "mstore8", "sload", "sstore")

# every tag kind the extractor can produce (besides variables and constants)
TAG_KINDS = frozenset(EQ_SOURCES.values()) | frozenset(MAY_SOURCES.values()) | {"data", "arg"}


def encode(v):
    if isinstance(v, Var):
        return v.name
    if isinstance(v, Const):
        return v.value
    return TOP


@dataclass
class BaseFactSet:
    facts: dict[str, set[tuple]]
    cfg: Cfg = field(repr=False, compare=False)
    label_info: dict[str, SsaInstruction] = field(default_factory=dict, repr=False, compare=False)

    def count(self) -> int:
        return sum(len(v) for v in self.facts.values())

    def get(self, pred: str) -> set[tuple]:
        return self.facts.get(pred, set())

    def add(self, pred: str, *args):
        self.facts.setdefault(pred, set()).add(tuple(args))

    def dump(self) -> str:
        lines = []
        for pred in sorted(self.facts):
            for t in sorted(self.facts[pred], key=sort_key):
                lines.append(f"{pred}({','.join(format_const(a) for a in t)})")
        return "\n".join(lines) + ("\n" if lines else "")


def instruction_fact(inst: SsaInstruction, dispatch: frozenset[str] = frozenset(), opaque=False):
    op = inst.opcode
    if op == "goto":
        name = "dispatch" if inst.label in dispatch else "goto"
        return name, (inst.label, encode(inst.args[0]), inst.target or TOP)
    args = inst.args
    if op in FACT_ARGS:
        args = tuple(args[i] for i in FACT_ARGS[op])
    enc = [encode(a) for a in args]
    if opaque and op in MEMORY_OFFSET_OPS and isinstance(args[0], Var):
        enc[0] = TOP
    head = (inst.label,) if inst.result is None else (inst.label, inst.result)
    return op, head + tuple(enc)


def _entry_labels(cfg: Cfg, bid: str, memo: dict[str, frozenset[str]]) -> frozenset[str]:
    """First labels reachable from the start of ``bid``, looking through empty blocks."""
    if bid in memo:
        return memo[bid]
    memo[bid] = frozenset()
    out: set[str] = set()
    stack, seen = [bid], set()
    while stack:
        b = stack.pop()
        if b in seen:
            continue
        seen.add(b)
        blk = cfg.blocks[b]
        if blk.instructions:
            out.add(blk.instructions[0].label)
        else:
            stack.extend(cfg.edges.get(b, ()))
    memo[bid] = frozenset(out)
    return memo[bid]


def extract_base_facts(cfg: Cfg, opaque_offsets: bool = False) -> BaseFactSet:
    """Encode every SSA instruction and the control flow as Datalog facts.

    With ``opaque_offsets`` the memory/storage offset of a load or store is
    written as ``top`` whenever it is not a constant, instead of naming the
    variable that holds it.
    """
    base = BaseFactSet({}, cfg)
    dispatch = cfg.methods.dispatch_labels if cfg.methods else frozenset()
    defs: dict[str, int] = {}
    memo: dict[str, frozenset[str]] = {}
    for bid, blk in cfg.blocks.items():
        base.add("Block", bid)
        prev = None
        for inst in blk.instructions:
            base.label_info[inst.label] = inst
            pred, args = instruction_fact(inst, dispatch, opaque_offsets)
            base.add(pred, *args)
            base.add("InBlock", inst.label, bid)
            if prev is not None:
                base.add("Follow", prev, inst.label)
                base.add("NextInBlock", prev, inst.label)
            prev = inst.label
            for a in inst.args:
                if isinstance(a, Const):
                    base.add("isConst", a.value)
                elif isinstance(a, Var):
                    base.add("isVar", a.name)
            if inst.result is not None:
                base.add("isVar", inst.result)
                defs[inst.result] = defs.get(inst.result, 0) + 1
            _sources(base, inst)
        for succ in cfg.edges.get(bid, ()):
            base.add("BlockEdge", bid, succ)
            if blk.instructions:
                for first in _entry_labels(cfg, succ, memo):
                    base.add("Follow", blk.instructions[-1].label, first)
    for kind in sorted(TAG_KINDS):
        base.add("Kind", kind)
    if cfg.entry in cfg.blocks:
        base.add("EntryBlock", cfg.entry)
        for first in _entry_labels(cfg, cfg.entry, memo):
            base.add("EntryLabel", first)
    for var, n in defs.items():
        if n > 1:
            base.add("multidef", var)
    for a, b in cfg.join_points:
        base.add("Join", a, b)
    return base


def _sources(base: BaseFactSet, inst: SsaInstruction):
    op, y = inst.opcode, inst.result
    if op in EQ_SOURCES:
        base.add("EqSource", y, EQ_SOURCES[op])
    elif op in MAY_SOURCES:
        base.add("Source", y, MAY_SOURCES[op])
    elif op == "calldataload":
        off = inst.args[0]
        base.add("DetSource", y, "data")
        if isinstance(off, Const):
            if off.value >= 4:
                base.add("DetSource", y, "arg")
        else:
            base.add("Source", y, "arg")
    elif op == "calldatacopy":
        base.add("CopyTag", inst.label, "data")
        base.add("CopyTag", inst.label, "arg")
    elif op == "sha3":
        off, size = inst.args
        if isinstance(off, Const) and isinstance(size, Const) and size.value <= 4096:
            for w in range(off.value, off.value + size.value, 32):
                base.add("Sha3Word", inst.label, w)
                base.add("isConst", w)
        else:
            base.add("Sha3Any", inst.label)
