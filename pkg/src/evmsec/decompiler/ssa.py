"""Lifting stack blocks to stack-free SSA with merge assignments at joins."""

from __future__ import annotations

from collections import deque

from ..opcodes import BY_NAME
from .cfg import StackBlock, StackCfg
from .ir import Block, Cfg, Const, SsaInstruction, Var

MAX_HEIGHT = 1024
HEIGHT_ROUNDS = 32

_HALT_NAMES = {"STOP": "stop", "RETURN": "return", "REVERT": "revert",
               "INVALID": "throw", "SELFDESTRUCT": "selfdestruct"}


def _need(op) -> int:
    name = op.mnemonic
    if name.startswith("DUP"):
        return int(name[3:])
    if name.startswith("SWAP"):
        return int(name[4:]) + 1
    return BY_NAME[name].pops


def _exit_height(blk: StackBlock, h: int) -> int | None:
    """Stack height after ``blk`` given entry height ``h``; None on underflow."""
    for op in blk.ops:
        if h < _need(op):
            return None
        info = BY_NAME[op.mnemonic]
        h += info.pushes - info.pops
    return h


def _heights(cfg: StackCfg, preds, merges) -> dict[str, int]:
    h_in: dict[str, int] = {}
    h_out: dict[str, int | None] = {}
    rounds: dict[str, int] = {}
    work = deque([cfg.entry])
    h_in[cfg.entry] = 0
    queued = {cfg.entry}
    while work:
        b = work.popleft()
        queued.discard(b)
        out = _exit_height(cfg.blocks[b], h_in[b])
        if out is not None:
            out = min(out, MAX_HEIGHT)
        if h_out.get(b, -1) == out and b in h_out:
            continue
        h_out[b] = out
        if out is None:
            continue
        for s in cfg.successors(b):
            if s in merges:
                new = max(h_in.get(s, 0), out)
                if s in h_in and new == h_in[s]:
                    continue
                rounds[s] = rounds.get(s, 0) + 1
                if rounds[s] > HEIGHT_ROUNDS and s in h_in:
                    continue
                h_in[s] = new
            else:
                if h_in.get(s) == out:
                    continue
                h_in[s] = out
            if s not in queued:
                queued.add(s)
                work.append(s)
    for b in cfg.blocks:
        h_in.setdefault(b, 0)
    return h_in


class _Lifter:
    def __init__(self, cfg: StackCfg):
        self.cfg = cfg
        self.flags: set[str] = set()
        self.truncated: set[str] = set()

    def lift(self, blk: StackBlock, stack: list):
        """Translate one block; returns (instructions, exit stack, copy insertion index)."""
        sfx = blk.suffix
        out: list[SsaInstruction] = []
        stack = list(stack)
        pending_goto = None
        for op in blk.ops:
            name = op.mnemonic
            label = f"l{op.offset}{sfx}"
            if len(stack) < _need(op):
                out.append(SsaInstruction(label, op.offset, "throw"))
                self.flags.add("stack-underflow")
                self.truncated.add(blk.id)
                return out, None, len(out)
            if name.startswith("PUSH") or name == "PC":
                var = f"v{op.offset}{sfx}"
                value = op.offset if name == "PC" else op.value
                out.append(SsaInstruction(label, op.offset, "assign", var, (Const(value),)))
                stack.append(Var(var))
            elif name.startswith("DUP"):
                stack.append(stack[-int(name[3:])])
            elif name.startswith("SWAP"):
                n = int(name[4:])
                stack[-1], stack[-1 - n] = stack[-1 - n], stack[-1]
            elif name == "POP":
                stack.pop()
            elif name == "JUMPDEST":
                out.append(SsaInstruction(label, op.offset, "jumpdest"))
            elif name == "JUMP":
                stack.pop()
                if blk.bad_jump and not blk.targets:
                    out.append(SsaInstruction(label, op.offset, "throw"))
            elif name == "JUMPI":
                stack.pop()
                cond = stack.pop()
                target = None
                if len(blk.targets) == 1:
                    target = f"l{self.cfg.blocks[blk.targets[0]].start}{self.cfg.blocks[blk.targets[0]].suffix}"
                pending_goto = SsaInstruction(label, op.offset, "goto", None, (cond,), target)
            else:
                info = BY_NAME[name]
                args = tuple(stack.pop() for _ in range(info.pops))
                opcode = _HALT_NAMES.get(name, name.lower())
                result = None
                if info.pushes:
                    result = f"v{op.offset}{sfx}"
                    stack.append(Var(result))
                out.append(SsaInstruction(label, op.offset, opcode, result, args))
        if not blk.ops:
            label = f"l{blk.start}{sfx}"
            out.append(SsaInstruction(label, blk.start, "stop" if blk.kind == "end" else "throw"))
        insert_at = len(out)
        if pending_goto is not None:
            out.append(pending_goto)
        return out, stack, insert_at


def to_ssa(cfg: StackCfg) -> Cfg:
    """Translate a jump-resolved stack CFG into SSA over the same block graph.

    Single-predecessor blocks inherit their predecessor's symbolic stack;
    every other block starts from fresh merge variables, and each
    predecessor receives one ``assign`` per slot it supplies.
    """
    preds = cfg.predecessors()
    merges = {b for b, ps in preds.items() if len(ps) != 1 or b == cfg.entry}
    heights = _heights(cfg, preds, merges)
    lifter = _Lifter(cfg)
    entry_stack: dict[str, list] = {}
    for b in merges:
        blk = cfg.blocks[b]
        h = heights[b]
        entry_stack[b] = [Var(f"m{blk.start}{blk.suffix}_{i}") for i in reversed(range(h))]

    children: dict[str, list[str]] = {b: [] for b in cfg.blocks}
    for b, ps in preds.items():
        if b not in merges:
            children[ps[0]].append(b)

    lifted: dict[str, tuple] = {}
    order = [b for b in cfg.blocks if b in merges]
    pending = deque(order)
    while True:
        while pending:
            b = pending.popleft()
            lifted[b] = lifter.lift(cfg.blocks[b], entry_stack[b])
            exit_stack = lifted[b][1]
            for c in children[b]:
                entry_stack[c] = list(exit_stack) if exit_stack is not None else []
                pending.append(c)
        rest = [b for b in cfg.blocks if b not in lifted]
        if not rest:
            break
        # single-predecessor cycles cut off from the entry
        entry_stack[rest[0]] = []
        pending.append(rest[0])

    insts = {b: list(v[0]) for b, v in lifted.items()}
    copies: dict[str, list[SsaInstruction]] = {b: [] for b in cfg.blocks}
    for b in cfg.blocks:
        if b not in merges:
            continue
        blk = cfg.blocks[b]
        for p in preds[b]:
            exit_stack = lifted[p][1]
            if exit_stack is None:
                continue
            pblk = cfg.blocks[p]
            off = pblk.last.offset if pblk.ops else pblk.start
            for i in range(min(heights[b], len(exit_stack))):
                mvar = f"m{blk.start}{blk.suffix}_{i}"
                val = exit_stack[-1 - i]
                if val == Var(mvar):
                    continue
                label = f"l{off}{pblk.suffix}_m{blk.start}{blk.suffix}_{i}"
                copies[p].append(SsaInstruction(label, off, "assign", mvar, (val,)))

    blocks: dict[str, Block] = {}
    for b, blk in cfg.blocks.items():
        body = insts[b]
        at = lifted[b][2]
        body[at:at] = copies[b]
        blocks[b] = Block(b, blk.start, tuple(body), blk.ctx)
    edges = {b: (() if b in lifter.truncated else cfg.edges.get(b, ())) for b in cfg.blocks}
    stats = dict(cfg.stats)
    stats["ssa_instructions"] = sum(len(b.instructions) for b in blocks.values())
    return Cfg(cfg.code, blocks, cfg.entry, edges, frozenset(),
               cfg.flags | lifter.flags, None, stats)
