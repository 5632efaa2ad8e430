"""Recognition of the ABI selector dispatcher."""

from __future__ import annotations

import logging

from .ir import Cfg, Const, MethodTable, Var
from .optimize import constant_values

log = logging.getLogger(__name__)

# operations through which a value stays a pure function of the selector word
_PURE = frozenset(
    {"assign", "shr", "shl", "div", "and", "or", "xor", "not", "eq", "iszero",
     "lt", "gt", "slt", "sgt", "sub", "add", "mul", "byte"}
)


def _selector_vars(cfg: Cfg, consts: dict[str, int]):
    """Vars that depend only on the selector word, calldatasize and constants.

    Returns (pure, carries_selector): the latter are those that actually
    read the leading calldata word.
    """
    defs: dict[str, list] = {}
    for inst in cfg.instructions():
        if inst.result is not None:
            defs.setdefault(inst.result, []).append(inst)

    def arg_const(a):
        if isinstance(a, Const):
            return a.value
        if isinstance(a, Var):
            return consts.get(a.name)
        return None

    pure = set(defs)
    carries = set()
    changed = True
    while changed:
        changed = False
        for var, insts in defs.items():
            if var not in pure:
                continue
            ok = True
            carry = False
            for inst in insts:
                if var in consts:
                    continue
                if inst.opcode == "calldataload":
                    off = arg_const(inst.args[0])
                    if off is not None and off < 4:
                        carry = True
                        continue
                    ok = False
                elif inst.opcode == "calldatasize":
                    continue
                elif inst.opcode in _PURE:
                    for a in inst.args:
                        if isinstance(a, Var) and a.name not in consts:
                            if a.name not in pure:
                                ok = False
                            elif a.name in carries:
                                carry = True
                else:
                    ok = False
            if not ok:
                pure.discard(var)
                carries.discard(var)
                changed = True
            elif carry and var not in carries:
                carries.add(var)
                changed = True
    return pure, carries, defs


def identify_methods(cfg: Cfg) -> MethodTable:
    """Map 4-byte selectors to the blocks the dispatcher jumps to."""
    consts = constant_values(cfg)
    pure, carries, defs = _selector_vars(cfg, consts)
    label_block = {b.first_label: bid for bid, b in cfg.blocks.items() if b.instructions}
    selectors: dict[int, str] = {}
    dispatch: set[str] = set()
    duplicate = False
    for bid, blk in cfg.blocks.items():
        if blk.ctx or not blk.instructions or blk.instructions[-1].opcode != "goto":
            continue
        goto = blk.instructions[-1]
        cond = goto.args[0]
        if not isinstance(cond, Var) or cond.name not in pure or cond.name not in carries | _sizes(cond, defs):
            continue
        dispatch.add(goto.label)
        for inst in defs.get(cond.name, ()):
            if inst.opcode != "eq":
                continue
            a, b = inst.args
            c = _const_of(a, consts) if _is_sel(b, carries) else _const_of(b, consts) if _is_sel(a, carries) else None
            if c is None or c >= 1 << 32 or goto.target not in label_block:
                continue
            if c in selectors:
                duplicate = True
                log.warning("selector %#010x compared twice", c)
                continue
            selectors[c] = label_block[goto.target]
    fallback = _fallback(cfg, dispatch, label_block)
    return MethodTable(dict(sorted(selectors.items())), fallback, frozenset(dispatch), duplicate)


def _sizes(cond: Var, defs) -> set[str]:
    # a guard like lt(calldatasize, 4) is dispatch logic even without the selector word
    out = set()
    for inst in defs.get(cond.name, ()):
        srcs = [a for a in inst.args if isinstance(a, Var)]
        if srcs and all(any(d.opcode == "calldatasize" for d in defs.get(s.name, ())) for s in srcs):
            out.add(cond.name)
    return out


def _is_sel(a, carries) -> bool:
    return isinstance(a, Var) and a.name in carries


def _const_of(a, consts):
    if isinstance(a, Const):
        return a.value
    if isinstance(a, Var):
        return consts.get(a.name)
    return None


def _fallback(cfg: Cfg, dispatch: set[str], label_block: dict[str, str]) -> str:
    cur = cfg.entry
    seen = set()
    while cur not in seen:
        seen.add(cur)
        blk = cfg.blocks[cur]
        if not blk.instructions or blk.instructions[-1].label not in dispatch:
            succs = cfg.edges.get(cur, ())
            if not blk.instructions and len(succs) == 1:
                cur = succs[0]
                continue
            return cur
        taken = label_block.get(blk.instructions[-1].target)
        rest = [s for s in cfg.edges.get(cur, ()) if s != taken]
        if len(rest) != 1:
            return cur
        cur = rest[0]
    return cur
