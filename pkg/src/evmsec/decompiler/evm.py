"""Concrete 256-bit EVM arithmetic used for constant folding."""

from __future__ import annotations

WORD = 1 << 256
MASK = WORD - 1
SIGN = 1 << 255


def to_signed(x: int) -> int:
    return x - WORD if x & SIGN else x


def _sdiv(a: int, b: int) -> int:
    if b == 0:
        return 0
    sa, sb = to_signed(a), to_signed(b)
    q = abs(sa) // abs(sb)
    return (-q if (sa < 0) != (sb < 0) else q) & MASK


def _smod(a: int, b: int) -> int:
    if b == 0:
        return 0
    sa, sb = to_signed(a), to_signed(b)
    r = abs(sa) % abs(sb)
    return (-r if sa < 0 else r) & MASK


def _signextend(b: int, x: int) -> int:
    if b >= 31:
        return x
    bit = 8 * b + 7
    mask = (1 << (bit + 1)) - 1
    return (x | (MASK ^ mask)) if (x >> bit) & 1 else (x & mask)


def _sar(shift: int, x: int) -> int:
    sx = to_signed(x)
    if shift >= 256:
        return MASK if sx < 0 else 0
    return (sx >> shift) & MASK


FOLDERS = {
    "add": lambda a, b: (a + b) & MASK,
    "mul": lambda a, b: (a * b) & MASK,
    "sub": lambda a, b: (a - b) & MASK,
    "div": lambda a, b: a // b if b else 0,
    "sdiv": _sdiv,
    "mod": lambda a, b: a % b if b else 0,
    "smod": _smod,
    "addmod": lambda a, b, n: (a + b) % n if n else 0,
    "mulmod": lambda a, b, n: (a * b) % n if n else 0,
    "exp": lambda a, b: pow(a, b, WORD),
    "signextend": _signextend,
    "lt": lambda a, b: int(a < b),
    "gt": lambda a, b: int(a > b),
    "slt": lambda a, b: int(to_signed(a) < to_signed(b)),
    "sgt": lambda a, b: int(to_signed(a) > to_signed(b)),
    "eq": lambda a, b: int(a == b),
    "iszero": lambda a: int(a == 0),
    "and": lambda a, b: a & b,
    "or": lambda a, b: a | b,
    "xor": lambda a, b: a ^ b,
    "not": lambda a: MASK ^ a,
    "byte": lambda i, x: (x >> (8 * (31 - i))) & 0xFF if i < 32 else 0,
    "shl": lambda s, x: (x << s) & MASK if s < 256 else 0,
    "shr": lambda s, x: x >> s if s < 256 else 0,
    "sar": _sar,
}


def fold(opcode: str, args: list[int]) -> int | None:
    """Evaluate a pure arithmetic opcode (lowercase name, stack order)."""
    fn = FOLDERS.get(opcode)
    if fn is None:
        return None
    return fn(*args)
