"""Independent oracles shared by the test modules.

Nothing here imports the analyzer's own evaluation code: the stack machine,
the postdominator computation and the path enumerators are written from the
EVM and graph definitions directly.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from Crypto.Hash import keccak

from evmsec.asm import assemble
from evmsec.datalog import Atom, Literal, Program, Rule, Variable, evaluate
from evmsec.decompiler.ir import Block, Cfg, Const, SsaInstruction, Var
from evmsec.frontend import decode_bytecode

M = 1 << 256


def keccak256(data: bytes) -> int:
    h = keccak.new(digest_bits=256)
    h.update(data)
    return int.from_bytes(h.digest(), "big")


def _signed(x):
    return x - M if x >> 255 else x


def _sdiv(a, b):
    if b == 0:
        return 0
    sa, sb = _signed(a), _signed(b)
    q = abs(sa) // abs(sb)
    return (-q if (sa < 0) != (sb < 0) else q) % M


ARITH = {
    "add": lambda a, b: (a + b) % M,
    "mul": lambda a, b: (a * b) % M,
    "sub": lambda a, b: (a - b) % M,
    "div": lambda a, b: a // b if b else 0,
    "sdiv": _sdiv,
    "mod": lambda a, b: a % b if b else 0,
    "exp": lambda a, b: pow(a, b, M),
    "lt": lambda a, b: int(a < b),
    "gt": lambda a, b: int(a > b),
    "slt": lambda a, b: int(_signed(a) < _signed(b)),
    "sgt": lambda a, b: int(_signed(a) > _signed(b)),
    "eq": lambda a, b: int(a == b),
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "byte": lambda i, x: (x >> (8 * (31 - i))) & 0xFF if i < 32 else 0,
    "shl": lambda s, x: (x << s) % M if s < 256 else 0,
    "shr": lambda s, x: x >> s if s < 256 else 0,
    "iszero": lambda a: int(a == 0),
    "not": lambda a: M - 1 - a,
    "addmod": lambda a, b, n: (a + b) % n if n else 0,
    "mulmod": lambda a, b, n: (a * b) % n if n else 0,
}


@dataclass
class Env:
    calldata: bytes = bytes(range(1, 100))
    caller: int = 0xCAFE
    callvalue: int = 7
    timestamp: int = 1_700_000_000

    def calldataload(self, off: int) -> int:
        chunk = self.calldata[off:off + 32] if off < len(self.calldata) else b""
        return int.from_bytes(chunk.ljust(32, b"\0"), "big")


ENV_OPS = {"caller", "callvalue", "timestamp", "calldataload", "calldatasize"}


def _env_value(op: str, args, env: Env) -> int:
    if op == "calldataload":
        return env.calldataload(args[0])
    if op == "calldatasize":
        return len(env.calldata)
    return getattr(env, op)


@dataclass
class Effects:
    """Observable behaviour of a straight-line run: memory and storage writes."""

    sstores: list = field(default_factory=list)
    mstores: list = field(default_factory=list)


class StackMachine:
    """Concrete interpreter for straight-line bytecode (no jumps)."""

    def __init__(self, env: Env | None = None):
        self.env = env or Env()

    def run(self, code: bytes) -> Effects:
        stack: list[int] = []
        mem = bytearray()
        out = Effects()
        pc = 0
        while pc < len(code):
            op = code[pc]
            pc += 1
            if 0x60 <= op <= 0x7F:
                n = op - 0x5F
                stack.append(int.from_bytes(code[pc:pc + n].ljust(n, b"\0"), "big"))
                pc += n
                continue
            if op == 0x5F:
                stack.append(0)
                continue
            if 0x80 <= op <= 0x8F:
                stack.append(stack[-(op - 0x7F)])
                continue
            if 0x90 <= op <= 0x9F:
                k = op - 0x8F
                stack[-1], stack[-1 - k] = stack[-1 - k], stack[-1]
                continue
            name = _NAMES[op]
            if name == "pop":
                stack.pop()
            elif name == "stop":
                break
            elif name in ARITH:
                n = ARITH[name].__code__.co_argcount
                args = [stack.pop() for _ in range(n)]
                stack.append(ARITH[name](*args))
            elif name in ENV_OPS:
                args = [stack.pop()] if name == "calldataload" else []
                stack.append(_env_value(name, args, self.env))
            elif name == "mstore":
                off, val = stack.pop(), stack.pop()
                if len(mem) < off + 32:
                    mem.extend(bytes(off + 32 - len(mem)))
                mem[off:off + 32] = val.to_bytes(32, "big")
                out.mstores.append((off, val))
            elif name == "mload":
                off = stack.pop()
                stack.append(int.from_bytes(bytes(mem[off:off + 32]).ljust(32, b"\0"), "big"))
            elif name == "sha3":
                off, size = stack.pop(), stack.pop()
                data = bytes(mem[off:off + size]).ljust(size, b"\0")
                stack.append(keccak256(data))
            elif name == "sstore":
                key, val = stack.pop(), stack.pop()
                out.sstores.append((key, val))
            else:
                raise NotImplementedError(name)
        return out


_NAMES = {
    0x00: "stop", 0x01: "add", 0x02: "mul", 0x03: "sub", 0x04: "div", 0x05: "sdiv", 0x06: "mod",
    0x08: "addmod", 0x09: "mulmod", 0x0A: "exp", 0x10: "lt", 0x11: "gt", 0x12: "slt", 0x13: "sgt",
    0x14: "eq", 0x15: "iszero", 0x16: "and", 0x17: "or", 0x18: "xor", 0x19: "not", 0x1A: "byte",
    0x1B: "shl", 0x1C: "shr", 0x20: "sha3", 0x33: "caller", 0x34: "callvalue", 0x35: "calldataload",
    0x36: "calldatasize", 0x42: "timestamp", 0x50: "pop", 0x51: "mload", 0x52: "mstore", 0x55: "sstore",
}


def run_ssa_straight(cfg: Cfg, env: Env | None = None) -> Effects:
    """Execute the SSA instructions of a jump-free Cfg in block order."""
    env = env or Env()
    vals: dict[str, int] = {}
    mem = bytearray()
    out = Effects()

    def v(a):
        if isinstance(a, Const):
            return a.value
        if isinstance(a, Var):
            return vals[a.name]
        raise AssertionError(f"unexpected operand {a!r}")

    bid = cfg.entry
    seen = set()
    while bid is not None and bid not in seen:
        seen.add(bid)
        for inst in cfg.blocks[bid].instructions:
            op, args = inst.opcode, [v(a) for a in inst.args]
            if op == "assign":
                vals[inst.result] = args[0]
            elif op in ARITH:
                vals[inst.result] = ARITH[op](*args)
            elif op in ENV_OPS:
                vals[inst.result] = _env_value(op, args, env)
            elif op == "mstore":
                off, val = args
                if len(mem) < off + 32:
                    mem.extend(bytes(off + 32 - len(mem)))
                mem[off:off + 32] = val.to_bytes(32, "big")
                out.mstores.append((off, val))
            elif op == "mload":
                off = args[0]
                vals[inst.result] = int.from_bytes(bytes(mem[off:off + 32]).ljust(32, b"\0"), "big")
            elif op == "sha3":
                off, size = args
                vals[inst.result] = keccak256(bytes(mem[off:off + size]).ljust(size, b"\0"))
            elif op == "sstore":
                out.sstores.append(tuple(args))
            elif op in ("stop", "jumpdest"):
                pass
            else:
                raise NotImplementedError(op)
        succ = cfg.edges.get(bid, ())
        bid = succ[0] if succ else None
    return out


# -- graphs ---------------------------------------------------------------------

def postdominators(succ: dict, exit_node) -> dict:
    """Iterative postdominator sets over ``succ`` with a unique ``exit_node``."""
    nodes = set(succ) | {exit_node}
    pdom = {n: set(nodes) for n in nodes}
    pdom[exit_node] = {exit_node}
    changed = True
    while changed:
        changed = False
        for n in nodes - {exit_node}:
            ss = succ.get(n, ())
            new = set.intersection(*(pdom[s] for s in ss)) if ss else set()
            new = new | {n}
            if new != pdom[n]:
                pdom[n], changed = new, True
    return pdom


def first_common_postdominator(succ, exit_node, a, b):
    pdom = postdominators(succ, exit_node)
    common = pdom[a] & pdom[b]
    # the closest common postdominator is postdominated by every other one
    for c in common:
        if all(d in pdom[c] for d in common):
            return c
    return None


def reachable_pairs(follow: set[tuple]) -> set[tuple]:
    succ: dict = {}
    for a, b in follow:
        succ.setdefault(a, set()).add(b)
    out = set()
    for src in succ:
        todo, seen = deque(succ[src]), set()
        while todo:
            n = todo.popleft()
            if n in seen:
                continue
            seen.add(n)
            out.add((src, n))
            todo.extend(succ.get(n, ()))
    return out


def all_paths(succ: dict, start, goal):
    """Every simple path from ``start`` to ``goal`` in a DAG."""
    stack = [(start, (start,))]
    while stack:
        node, path = stack.pop()
        if node == goal:
            yield path
            continue
        for s in succ.get(node, ()):
            stack.append((s, path + (s,)))


def label_follow(cfg: Cfg) -> set[tuple]:
    """Follow edges written out from the block structure (non-empty blocks only)."""
    out = set()
    for bid, blk in cfg.blocks.items():
        labels = [i.label for i in blk.instructions]
        out.update(zip(labels, labels[1:]))
        for s in cfg.edges.get(bid, ()):
            out.add((labels[-1], cfg.blocks[s].instructions[0].label))
    return out


def random_cfg(rng: random.Random, n_blocks: int, dag: bool, extra_edges: float = 0.3) -> Cfg:
    """A synthetic SSA Cfg: blocks of 1-3 instructions, 1 or 2 successors each.

    With ``dag`` every edge goes forward, so the graph is acyclic.
    """
    edges: dict[str, tuple] = {}
    blocks: dict[str, Block] = {}
    ids = [f"b{i}" for i in range(n_blocks)]
    for i, bid in enumerate(ids):
        if i == n_blocks - 1:
            succ = ()
        else:
            pool = ids[i + 1:] if dag else ids
            first = ids[i + 1]
            succ = (first,)
            if rng.random() < extra_edges:
                other = rng.choice(pool)
                if other != first:
                    succ = (first, other)
            if not dag and rng.random() < 0.15:
                back = rng.choice(ids[: i + 1])
                succ = tuple(dict.fromkeys(succ + (back,)))[:2]
        insts = []
        for k in range(rng.randint(1, 3)):
            insts.append(SsaInstruction(f"l{i}_{k}", i, "assign", f"v{i}_{k}", (Const(k),)))
        if len(succ) == 2:
            insts.append(SsaInstruction(f"l{i}_g", i, "goto", None, (Var(f"v{i}_0"),),
                                        target=f"l{succ[1][1:]}_0"))
        elif not succ:
            insts.append(SsaInstruction(f"l{i}_s", i, "stop"))
        blocks[bid] = Block(bid, i, tuple(insts))
        edges[bid] = succ
    return Cfg(decode_bytecode(""), blocks, "b0", edges)


# -- structured programs ----------------------------------------------------------

class StructuredGen:
    """Random nested if/else programs in assembler syntax.

    Branch conditions are calldata words; bodies are constant sstores. The
    returned source always ends in STOP.
    """

    def __init__(self, rng: random.Random, max_depth: int = 3):
        self.rng, self.max_depth, self.n = rng, max_depth, 0

    def stmt(self, depth: int) -> list[str]:
        r = self.rng.random()
        if depth >= self.max_depth or r < 0.35:
            k = self.rng.randint(0, 200)
            return [f"PUSH1 {self.rng.randint(1, 99)} PUSH1 {k} SSTORE"]
        self.n += 1
        i = self.n
        cond = f"PUSH1 {4 + 32 * self.rng.randint(0, 3)} CALLDATALOAD"
        then = self.block(depth + 1)
        if r < 0.55:  # if without else
            return [f"{cond} ISZERO PUSH @end{i} JUMPI", *then, f":end{i} JUMPDEST"]
        other = self.block(depth + 1)
        return [f"{cond} PUSH @else{i} JUMPI", *then, f"PUSH @end{i} JUMP",
                f":else{i} JUMPDEST", *other, f":end{i} JUMPDEST"]

    def block(self, depth: int) -> list[str]:
        out = []
        for _ in range(self.rng.randint(1, 2)):
            out += self.stmt(depth)
        return out

    def program(self) -> str:
        body = []
        while self.n == 0:
            body = self.block(0)
        return "\n".join(body + ["STOP"]) + "\n"


def assemble_hex(src: str) -> str:
    return assemble(src).hex


# -- Datalog ------------------------------------------------------------------

def _match(atom, fact, env):
    env = dict(env)
    for t, v in zip(atom.terms, fact):
        if isinstance(t, Variable):
            if t.anonymous:
                continue
            if t.name in env and env[t.name] != v:
                return None
            env[t.name] = v
        elif t != v:
            return None
    return env


def _ground(atom, env):
    return tuple(env[t.name] if isinstance(t, Variable) else t for t in atom.terms)


def _holds_neg(atom, env, model):
    # anonymous variables in a negated literal are existential
    for fact in model.get(atom.pred, ()):
        if _match(atom, fact, env) is not None:
            return True
    return False


def tp_step(rules, model):
    """One application of the immediate consequence operator."""
    out = set()
    for r in rules:
        pos = [l.atom for l in r.body if l.positive]
        neg = [l.atom for l in r.body if not l.positive]
        envs = [{}]
        for a in pos:
            envs = [e2 for e in envs for f in model.get(a.pred, ()) if (e2 := _match(a, f, e)) is not None]
        for e in envs:
            if not any(_holds_neg(a, e, model) for a in neg):
                out.add((r.head.pred, _ground(r.head, e)))
    return out


def naive_model(rules, levels, facts):
    """Stratum-by-stratum naive iteration, using the generator's own levels."""
    model = {p: set(rows) for p, rows in facts.items()}
    for lvl in sorted({levels[r.head.pred] for r in rules}):
        stratum = [r for r in rules if levels[r.head.pred] == lvl]
        while True:
            new = {(p, t) for p, t in tp_step(stratum, model) if t not in model.get(p, set())}
            if not new:
                break
            for p, t in new:
                model.setdefault(p, set()).add(t)
    return model


# -- random stratified programs -------------------------------------------------------

CONSTS = [0, 1, 2, "a"]
VARS = ["X", "Y", "Z"]


def random_program(rng: random.Random):
    """A stratified program over at most 4 predicates, 8 rules, 20 facts, arity 3.

    Returns (program, level per predicate, input facts, arity per predicate).
    """
    n_edb = rng.randint(1, 2)
    n_idb = rng.randint(1, 4 - n_edb)
    edb = [f"e{i}" for i in range(n_edb)]
    idb = [f"p{i}" for i in range(n_idb)]
    arity = {p: rng.randint(1, 3) for p in edb + idb}
    levels = {p: 0 for p in edb}
    for i, p in enumerate(idb):
        levels[p] = 1 + rng.randint(0, i)  # non-decreasing-ish, several may share a level
    rules = []
    for _ in range(rng.randint(1, 8)):
        head = rng.choice(idb)
        lv = levels[head]
        pos_pool = [p for p in edb + idb if levels[p] <= lv]
        neg_pool = [p for p in edb + idb if levels[p] < lv]
        body, bound = [], []
        for _ in range(rng.randint(1, 3)):
            p = rng.choice(pos_pool)
            terms = tuple(Variable(rng.choice(VARS)) if rng.random() < 0.8 else rng.choice(CONSTS)
                          for _ in range(arity[p]))
            body.append(Literal(Atom(p, terms)))
            bound += [t.name for t in terms if isinstance(t, Variable)]
        if not bound:
            continue
        if neg_pool and rng.random() < 0.5:
            p = rng.choice(neg_pool)
            terms = tuple(Variable(rng.choice(bound)) if rng.random() < 0.7 else rng.choice(CONSTS)
                          for _ in range(arity[p]))
            body.append(Literal(Atom(p, terms), positive=False))
        h = tuple(Variable(rng.choice(bound)) if rng.random() < 0.85 else rng.choice(CONSTS)
                  for _ in range(arity[head]))
        rules.append(Rule(Atom(head, h), tuple(body)))
    if not rules:
        return random_program(rng)
    facts = {}
    for _ in range(rng.randint(0, 20)):
        p = rng.choice(edb)
        facts.setdefault(p, set()).add(tuple(rng.choice(CONSTS) for _ in range(arity[p])))
    return Program(tuple(rules), frozenset(edb)), levels, facts, arity


def engine_model(program, facts):
    m = evaluate(program, facts)
    return {p: set(m.facts(p)) for p in m.predicates() if m.facts(p)}


def run_oracle_batch(n: int, seed: int = 0) -> int:
    """Compare engine and naive models on ``n`` random programs; returns mismatches."""
    rng = random.Random(seed)
    bad = 0
    for _ in range(n):
        prog, levels, facts, _ = random_program(rng)
        want = {p: rows for p, rows in naive_model(list(prog.rules), levels, facts).items() if rows}
        if engine_model(prog, facts) != want:
            bad += 1
    return bad
