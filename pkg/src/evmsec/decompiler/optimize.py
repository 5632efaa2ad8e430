"""Partial evaluation and dead-instruction elimination over SSA."""

from __future__ import annotations

from Crypto.Hash import keccak

from .evm import FOLDERS, MASK
from .ir import Block, Cfg, Const, SsaInstruction, Var

_BOT = object()
_TOP = object()
MAX_HASH_BYTES = 4096

# instructions that overwrite memory in ways the block-local model does not track
_MEMORY_CLOBBER = frozenset(
    {"calldatacopy", "codecopy", "extcodecopy", "returndatacopy", "mcopy",
     "call", "callcode", "delegatecall", "staticcall", "create", "create2"}
)
_KEEP_RESULT = frozenset({"call", "callcode", "delegatecall", "staticcall", "create", "create2"})


def keccak256(data: bytes) -> int:
    return int.from_bytes(keccak.new(digest_bits=256, data=data).digest(), "big")


def _meet(a, b):
    if a is _BOT:
        return b
    if b is _BOT or a == b:
        return a
    return _TOP


class _Memory:
    """Byte-granular knowledge of memory contents within one block.

    Bytes map to an int, or to ``_BOT`` while the stored value is not yet
    known to the optimistic iteration. ``pending`` marks a store whose
    offset is still undecided, which makes every later read undecided too.
    """

    def __init__(self):
        self.known: dict[int, object] = {}
        self.pending = False

    def store(self, off, value, width: int):
        if off is _BOT:
            self.pending = True
            return
        if not isinstance(off, int):
            self.known.clear()
            self.pending = False
            return
        if isinstance(value, int):
            data = (value & ((1 << (8 * width)) - 1)).to_bytes(width, "big")
            for i, b in enumerate(data):
                self.known[off + i] = b
        elif value is _BOT:
            for i in range(width):
                self.known[off + i] = _BOT
        else:
            for i in range(width):
                self.known.pop(off + i, None)

    def clobber(self):
        self.known.clear()
        self.pending = False

    def read(self, off, size):
        if off is _BOT or size is _BOT or self.pending:
            return _BOT
        if not isinstance(off, int) or not isinstance(size, int) or size > MAX_HASH_BYTES:
            return _TOP
        out = bytearray()
        for i in range(size):
            b = self.known.get(off + i, _TOP)
            if b is _BOT or b is _TOP:
                return b
            out.append(b)
        return bytes(out)


def _evaluate(inst: SsaInstruction, val, mem: _Memory):
    op = inst.opcode
    args = [val(a) for a in inst.args]
    if op == "assign":
        return args[0]
    if op in FOLDERS:
        if any(a is _BOT for a in args):
            return _BOT
        if all(isinstance(a, int) for a in args):
            return FOLDERS[op](*args)
        return _TOP
    if op == "mload":
        data = mem.read(args[0], 32)
        return int.from_bytes(data, "big") if isinstance(data, bytes) else data
    if op == "sha3":
        data = mem.read(args[0], args[1])
        return keccak256(data) if isinstance(data, bytes) else data
    return _TOP


def _effect(inst: SsaInstruction, val, mem: _Memory):
    op = inst.opcode
    if op == "mstore":
        mem.store(val(inst.args[0]), val(inst.args[1]), 32)
    elif op == "mstore8":
        mem.store(val(inst.args[0]), val(inst.args[1]), 1)
    elif op in _MEMORY_CLOBBER:
        mem.clobber()


def constant_values(cfg: Cfg) -> dict[str, int]:
    """Optimistic constant analysis; maps each provably constant var to its value."""
    vals: dict[str, object] = {}

    def val(a):
        if isinstance(a, Const):
            return a.value
        if isinstance(a, Var):
            return vals.get(a.name, _BOT)
        return _TOP

    changed = True
    while changed:
        changed = False
        for blk in cfg.blocks.values():
            mem = _Memory()
            for inst in blk.instructions:
                if inst.result is not None:
                    new = _evaluate(inst, val, mem)
                    if isinstance(new, int):
                        new &= MASK
                    old = vals.get(inst.result, _BOT)
                    merged = _meet(old, new)
                    if merged != old:
                        vals[inst.result] = merged
                        changed = True
                _effect(inst, val, mem)
    return {k: v for k, v in vals.items() if isinstance(v, int)}


def propagate_constants(cfg: Cfg) -> Cfg:
    """Replace provably constant variables by constants and fold their definitions."""
    consts = constant_values(cfg)

    def sub(a):
        if isinstance(a, Var) and a.name in consts:
            return Const(consts[a.name])
        return a

    blocks = {}
    for bid, blk in cfg.blocks.items():
        out = []
        for inst in blk.instructions:
            inst = inst.with_args(sub(a) for a in inst.args)
            if (
                inst.result in consts
                and inst.opcode not in _KEEP_RESULT
                and not (inst.opcode == "assign" and isinstance(inst.args[0], Const))
            ):
                inst = SsaInstruction(inst.label, inst.offset, "assign", inst.result,
                                      (Const(consts[inst.result]),))
            out.append(inst)
        blocks[bid] = Block(blk.id, blk.start, tuple(out), blk.ctx)
    stats = dict(cfg.stats)
    stats["constant_vars"] = len(consts)
    return cfg.with_blocks(blocks, stats=stats)


def eliminate_unused(cfg: Cfg) -> Cfg:
    """Drop side-effect-free instructions whose result is never read, to a fixpoint."""
    alive = {bid: list(b.instructions) for bid, b in cfg.blocks.items()}
    removed = 0
    while True:
        used = {u for insts in alive.values() for i in insts for u in i.uses()}
        dropped = False
        for bid, insts in alive.items():
            keep = [i for i in insts if i.has_side_effect or i.result in used]
            if len(keep) != len(insts):
                removed += len(insts) - len(keep)
                alive[bid] = keep
                dropped = True
        if not dropped:
            break
    blocks = {bid: Block(b.id, b.start, tuple(alive[bid]), b.ctx) for bid, b in cfg.blocks.items()}
    stats = dict(cfg.stats)
    stats["eliminated"] = stats.get("eliminated", 0) + removed
    stats["ssa_instructions"] = sum(len(b.instructions) for b in blocks.values())
    return cfg.with_blocks(blocks, stats=stats)
