"""Bytecode to SSA: CFG recovery, lifting, optimization and join points."""

from __future__ import annotations

from dataclasses import dataclass

from ..frontend import CodeImage, decode_bytecode
from .cfg import ImpreciseJumpError, StackBlock, StackCfg, build_cfg, inline_methods, resolve_jumps
from .ir import Block, Cfg, Const, MethodTable, SsaInstruction, Top, Value, Var
from .joins import compute_join_points, with_join_points
from .methods import identify_methods
from .optimize import eliminate_unused, keccak256, propagate_constants
from .ssa import to_ssa

__all__ = [
    "Block", "Cfg", "Const", "DecompileOptions", "ImpreciseJumpError", "MethodTable",
    "SsaInstruction", "StackBlock", "StackCfg", "Top", "Value", "Var", "build_cfg",
    "compute_join_points", "decompile", "dump_ir", "eliminate_unused", "identify_methods",
    "inline_methods", "keccak256", "propagate_constants", "resolve_jumps", "to_ssa",
]


@dataclass(frozen=True)
class DecompileOptions:
    inline: bool = True
    inline_depth: int = 2
    strict_jumps: bool = False
    optimize: bool = True


def decompile(code: CodeImage | str | bytes, options: DecompileOptions = DecompileOptions()) -> Cfg:
    if not isinstance(code, CodeImage):
        code = decode_bytecode(code)
    raw = build_cfg(code)
    resolved = resolve_jumps(raw, strict=options.strict_jumps)
    table = identify_methods(to_ssa(resolved))
    depth = options.inline_depth if options.inline else 0
    stack_cfg = inline_methods(resolved, table, depth, strict=options.strict_jumps)
    cfg = to_ssa(stack_cfg)
    if options.optimize:
        cfg = eliminate_unused(propagate_constants(cfg))
    cfg = with_join_points(cfg)
    table = identify_methods(cfg)
    flags = set(cfg.flags)
    if table.malformed:
        flags.add("malformed-dispatcher")
    return cfg.with_blocks(cfg.blocks, methods=table, flags=frozenset(flags))


def dump_ir(cfg: Cfg) -> str:
    """One instruction per line (label, opcode, result, args), blocks in order."""
    lines = []
    for bid, blk in cfg.blocks.items():
        succ = " ".join(cfg.edges.get(bid, ()))
        lines.append(f"block {bid} -> [{succ}]")
        for inst in blk.instructions:
            args = " ".join(str(a) for a in inst.args)
            res = inst.result or "-"
            tgt = f" => {inst.target or 'top'}" if inst.opcode == "goto" else ""
            lines.append(f"  {inst.label}\t{inst.opcode}\t{res}\t{args}{tgt}".rstrip())
    for a, b in sorted(cfg.join_points):
        lines.append(f"join {a} {b}")
    return "\n".join(lines) + "\n"
