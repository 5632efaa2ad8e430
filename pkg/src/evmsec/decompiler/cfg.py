"""Stack-level control-flow graphs: block partition, jump resolution, inlining.

Jump resolution and method inlining share one engine: a worklist abstract
interpretation over blocks where every stack slot holds a small set of
possible constants (or ``None`` for unknown). Nodes are keyed by
``(block start, context)``; the context is a call string of frames
``(call-site offset, return address, callee entry)``. With a depth limit of
0 the context is always empty, which is plain jump resolution.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from itertools import product

from ..frontend import CodeImage, RawOpcode
from ..opcodes import BLOCK_ENDERS, BY_NAME, HALTING
from .evm import FOLDERS

log = logging.getLogger(__name__)

Frame = tuple[int, int, int]
Ctx = tuple[Frame, ...]

MAX_ROUNDS = 16
MAX_SET = 64


class ImpreciseJumpError(RuntimeError):
    """Raised in strict mode when a jump target cannot be resolved."""


def ctx_suffix(ctx: Ctx) -> str:
    return "".join(f"_{site}" for site, _, _ in ctx)


def block_id(start: int, ctx: Ctx = ()) -> str:
    return f"b{start}{ctx_suffix(ctx)}"


@dataclass(frozen=True)
class StackBlock:
    id: str
    start: int
    ops: tuple[RawOpcode, ...]
    # how control leaves: jump, jumpi, halt, fall, invalid (falls into data), end (past code end)
    kind: str
    ctx: Ctx = ()
    fallthrough: str | None = None
    targets: tuple[str, ...] = ()
    bad_jump: bool = False

    @property
    def suffix(self) -> str:
        return ctx_suffix(self.ctx)

    @property
    def last(self) -> RawOpcode | None:
        return self.ops[-1] if self.ops else None


@dataclass(frozen=True)
class StackCfg:
    code: CodeImage
    blocks: dict[str, StackBlock]
    entry: str
    edges: dict[str, tuple[str, ...]]
    flags: frozenset[str] = frozenset()
    unresolved: frozenset[str] = frozenset()
    # block start offset -> ids of its copies, filled after resolution
    stats: dict = field(default_factory=dict, compare=False)

    def successors(self, bid: str) -> tuple[str, ...]:
        return self.edges.get(bid, ())

    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {b: [] for b in self.blocks}
        for src, dsts in self.edges.items():
            for d in dsts:
                preds[d].append(src)
        return preds


def _partition(code: CodeImage) -> list[tuple[int, tuple[RawOpcode, ...], str]]:
    """Split the opcode stream into (start, ops, kind) triples."""
    out = []
    region_starts = {a for a, _ in code.invalid_regions}
    cur: list[RawOpcode] = []

    def close(next_offset: int):
        last = cur[-1]
        if last.mnemonic in HALTING:
            kind = "halt"
        elif last.mnemonic in ("JUMP", "JUMPI"):
            kind = last.mnemonic.lower()
        elif next_offset in region_starts:
            kind = "invalid"
        elif next_offset >= len(code):
            kind = "end"
        else:
            kind = "fall"
        out.append((cur[0].offset, tuple(cur), kind))

    for i, op in enumerate(code.opcodes):
        if cur and (
            op.mnemonic == "JUMPDEST"
            or cur[-1].mnemonic in BLOCK_ENDERS
            or cur[-1].offset + cur[-1].size != op.offset
        ):
            close(cur[-1].offset + cur[-1].size)
            cur = []
        cur.append(op)
    if cur:
        close(cur[-1].offset + cur[-1].size)
    return out


def _pseudo_blocks(code: CodeImage, parts) -> dict[int, str]:
    # offsets reachable by falling through that hold no decoded opcode
    starts = {s for s, _, _ in parts}
    pseudo = {}
    for start, ops, kind in parts:
        if kind in ("jump", "halt"):
            continue
        nxt = ops[-1].offset + ops[-1].size
        if nxt not in starts:
            pseudo[nxt] = "end" if nxt >= len(code) else "invalid"
    if 0 not in starts:
        pseudo[0] = "end" if not code.bytes else "invalid"
    return pseudo


def build_cfg(code: CodeImage) -> StackCfg:
    """Partition into blocks and link fall-through and push-then-jump edges."""
    parts = _partition(code)
    pseudo = _pseudo_blocks(code, parts)
    blocks: dict[str, StackBlock] = {}
    edges: dict[str, tuple[str, ...]] = {}
    unresolved = set()
    for start, ops, kind in parts:
        bid = block_id(start)
        last = ops[-1]
        fall = None
        if kind not in ("jump", "halt"):
            fall = block_id(last.offset + last.size)
        targets: tuple[str, ...] = ()
        bad = False
        if kind in ("jump", "jumpi"):
            prev = ops[-2] if len(ops) > 1 else None
            if prev is not None and prev.mnemonic.startswith("PUSH"):
                if code.is_jumpdest(prev.value):
                    targets = (block_id(prev.value),)
                else:
                    bad = True
            else:
                unresolved.add(bid)
        blocks[bid] = StackBlock(bid, start, ops, kind, (), fall, targets, bad)
        edges[bid] = tuple(dict.fromkeys(targets + ((fall,) if fall else ())))
    for start, kind in pseudo.items():
        bid = block_id(start)
        blocks[bid] = StackBlock(bid, start, (), kind)
        edges[bid] = ()
    blocks = dict(sorted(blocks.items(), key=lambda kv: kv[1].start))
    return StackCfg(code, blocks, block_id(0), {b: edges[b] for b in blocks},
                    frozenset(), frozenset(unresolved))


# -- abstract interpretation ---------------------------------------------------

Val = frozenset | None


def _join(a: Val, b: Val) -> Val:
    if a is None or b is None:
        return None
    u = a | b
    return u if len(u) <= MAX_SET else None


def _join_states(old: tuple, new: tuple) -> tuple:
    n = min(len(old), len(new))
    if n == 0:
        return ()
    return tuple(_join(x, y) for x, y in zip(old[len(old) - n :], new[len(new) - n :]))


def _fold_sets(name: str, args: list[Val]) -> Val:
    fn = FOLDERS.get(name)
    if fn is None or any(a is None for a in args):
        return None
    size = 1
    for a in args:
        size *= len(a)
    if size > MAX_SET:
        return None
    return frozenset(fn(*combo) for combo in product(*args))


def _simulate(ops, entry: tuple):
    """Run a block abstractly; returns the exit stack of (val, local) and the jump target."""
    stack: list[tuple[Val, bool]] = [(v, False) for v in entry]

    def pop():
        return stack.pop() if stack else (None, False)

    target = None
    for op in ops:
        name = op.mnemonic
        if name.startswith("PUSH"):
            stack.append((frozenset({op.value}), True))
        elif name == "PC":
            stack.append((frozenset({op.offset}), True))
        elif name.startswith("DUP"):
            n = int(name[3:])
            while len(stack) < n:
                stack.insert(0, (None, False))
            stack.append(stack[-n])
        elif name.startswith("SWAP"):
            n = int(name[4:])
            while len(stack) < n + 1:
                stack.insert(0, (None, False))
            stack[-1], stack[-1 - n] = stack[-1 - n], stack[-1]
        elif name == "JUMP":
            target = pop()[0]
        elif name == "JUMPI":
            target = pop()[0]
            pop()
        else:
            info = BY_NAME[name]
            args = [pop()[0] for _ in range(info.pops)]
            if info.pushes:
                stack.append((_fold_sets(name.lower(), args), False))
    return stack, target


@dataclass
class _Explorer:
    raw: StackCfg
    depth: int
    no_inline: frozenset[int]
    strict: bool
    state: dict = field(default_factory=dict)
    changes: dict = field(default_factory=dict)
    succ: dict = field(default_factory=dict)
    jump_succ: dict = field(default_factory=dict)
    bad: set = field(default_factory=set)
    unresolved: set = field(default_factory=set)
    recursive: set = field(default_factory=set)
    widened: set = field(default_factory=set)

    def __post_init__(self):
        self.by_start = {b.start: b for b in self.raw.blocks.values()}
        self.jumpdests = sorted(
            b.start for b in self.raw.blocks.values() if b.ops and b.ops[0].mnemonic == "JUMPDEST"
        )
        self.work: deque = deque()
        self.queued: set = set()

    def push(self, key, stack: tuple):
        old = self.state.get(key)
        if old is None:
            new = stack
        else:
            new = _join_states(old, stack)
            if new == old:
                return
            self.changes[key] = self.changes.get(key, 0) + 1
            if self.changes[key] > MAX_ROUNDS:
                new = tuple(None for _ in new)
                self.widened.add(key)
        self.state[key] = new
        if key not in self.queued:
            self.queued.add(key)
            self.work.append(key)

    def edge(self, src, dst, exit_stack, jump=False):
        self.succ.setdefault(src, set()).add(dst)
        if jump:
            self.jump_succ.setdefault(src, set()).add(dst)
        self.push(dst, exit_stack)

    def resolve_targets(self, key, blk, vals, stack):
        start, ctx = key
        exit_vals = tuple(v for v, _ in stack)
        if vals is None:
            self.unresolved.add(key)
            if self.strict:
                raise ImpreciseJumpError(f"unresolved jump at offset {blk.last.offset}")
            for t in self.jumpdests:
                self.edge(key, (t, ctx), exit_vals, jump=True)
            return
        valid = sorted(t for t in vals if self.raw.code.is_jumpdest(t))
        if len(valid) < len(vals):
            self.bad.add(key)
        frame = ctx[-1] if ctx else None
        for t in valid:
            if frame is not None and t == frame[1]:
                self.edge(key, (t, ctx[:-1]), exit_vals, jump=True)
                continue
            new_ctx = ctx
            if blk.kind == "jump" and len(valid) == 1:
                new_ctx = self.call_context(blk, ctx, t, stack)
            self.edge(key, (t, new_ctx), exit_vals, jump=True)

    def call_context(self, blk, ctx, t, stack) -> Ctx:
        if self.depth <= len(ctx) or t in self.no_inline:
            return ctx
        for val, local in reversed(stack):
            if not local or val is None or len(val) != 1:
                continue
            (r,) = val
            if r != t and self.raw.code.is_jumpdest(r):
                if any(f[2] == t for f in ctx):
                    self.recursive.add(t)
                    return ctx
                return ctx + ((blk.last.offset, r, t),)
        return ctx

    def run(self, entry_start: int):
        self.push((entry_start, ()), ())
        while self.work:
            key = self.work.popleft()
            self.queued.discard(key)
            blk = self.by_start[key[0]]
            stack, target = _simulate(blk.ops, self.state[key])
            exit_vals = tuple(v for v, _ in stack)
            self.succ.setdefault(key, set())
            if blk.kind in ("jump", "jumpi"):
                self.resolve_targets(key, blk, target, stack)
            if blk.kind in ("jumpi", "fall", "invalid", "end") and blk.fallthrough is not None:
                nxt = self.raw.blocks[blk.fallthrough].start
                self.edge(key, (nxt, key[1]), exit_vals)


def _sort_key(key):
    return key[0], key[1]


def _explore(raw: StackCfg, depth: int, strict: bool) -> StackCfg:
    if not raw.blocks:
        return raw
    no_inline: frozenset[int] = frozenset()
    flags = set(raw.flags)
    entry_start = raw.blocks[raw.entry].start
    while True:
        ex = _Explorer(raw, depth, no_inline, strict)
        ex.run(entry_start)
        if ex.recursive - no_inline:
            no_inline = no_inline | ex.recursive
            flags.add("recursion")
            continue
        break
    if ex.unresolved:
        flags.add("imprecise-jumps")
    if ex.widened:
        flags.add("widened")
    keys = sorted(ex.state, key=_sort_key)
    blocks: dict[str, StackBlock] = {}
    edges: dict[str, tuple[str, ...]] = {}
    for key in keys:
        start, ctx = key
        base = ex.by_start[start]
        bid = block_id(start, ctx)
        succs = sorted(ex.succ.get(key, ()), key=_sort_key)
        jumps = sorted(ex.jump_succ.get(key, ()), key=_sort_key)
        fall = None
        if base.fallthrough is not None:
            nxt = (raw.blocks[base.fallthrough].start, ctx)
            if nxt in ex.succ.get(key, ()):
                fall = block_id(*nxt)
        blocks[bid] = replace(
            base,
            id=bid,
            ctx=ctx,
            fallthrough=fall,
            targets=tuple(block_id(*k) for k in jumps),
            bad_jump=key in ex.bad,
        )
        edges[bid] = tuple(block_id(*k) for k in succs)
    stats = {
        "blocks": len(blocks),
        "jumps": sum(1 for b in blocks.values() if b.kind in ("jump", "jumpi")),
        "unresolved_jumps": len(ex.unresolved),
        "unreachable_blocks": len({b.start for b in raw.blocks.values()} - {k[0] for k in keys}),
    }
    return StackCfg(
        raw.code,
        blocks,
        block_id(entry_start),
        edges,
        frozenset(flags),
        frozenset(block_id(*k) for k in ex.unresolved),
        stats,
    )


def resolve_jumps(cfg: StackCfg, strict: bool = False) -> StackCfg:
    """Resolve jump targets by abstract stack simulation (no contexts).

    Only blocks reachable from the entry survive. Jumps whose target stays
    unknown are linked to every JUMPDEST and flag ``imprecise-jumps``.
    """
    return _explore(_strip(cfg), 0, strict)


def inline_methods(cfg: StackCfg, table=None, depth_limit: int = 2, strict: bool = False) -> StackCfg:
    """Clone subroutine bodies per call site, up to ``depth_limit`` nested calls.

    A call is a JUMP to a single known target while a return address (a
    JUMPDEST constant pushed in the same block) sits on the stack; jumping
    back to that address closes the frame. Recursive callees are never cloned.
    ``table`` is accepted for pipeline symmetry; dispatch jumps are JUMPIs and
    are never treated as calls.
    """
    if depth_limit <= 0:
        return cfg
    return _explore(_strip(cfg), depth_limit, strict)


def _strip(cfg: StackCfg) -> StackCfg:
    # recover the context-free raw graph that exploration starts from
    if all(not b.ctx for b in cfg.blocks.values()) and not cfg.stats:
        return cfg
    return build_cfg(cfg.code)
