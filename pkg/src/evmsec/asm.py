"""A tiny two-pass assembler used to author bytecode fixtures.

Source is a whitespace-separated token stream. ``;`` starts a comment,
``:name`` defines a label at the current offset, ``@name`` as a push operand
refers to a label (always encoded as PUSH2), ``PUSH`` without a width picks
the smallest one, and ``.hex <digits>`` emits raw bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .opcodes import BY_NAME


class AsmError(ValueError):
    pass


@dataclass
class Assembly:
    code: bytes
    labels: dict[str, int]

    @property
    def hex(self) -> str:
        return self.code.hex()


def _tokens(source: str) -> list[str]:
    out: list[str] = []
    for line in source.splitlines():
        out.extend(line.split(";", 1)[0].split())
    return out


def _width(value: int) -> int:
    return max(1, (value.bit_length() + 7) // 8)


def _parse_int(tok: str) -> int:
    try:
        return int(tok, 0)
    except ValueError as exc:
        raise AsmError(f"bad immediate {tok!r}") from exc


def assemble(source: str) -> Assembly:
    toks = _tokens(source)
    # pass 1: layout; label refs are always 2 bytes wide
    items: list[tuple[str, object]] = []
    labels: dict[str, int] = {}
    pc = 0
    i = 0
    while i < len(toks):
        tok = toks[i]
        up = tok.upper()
        if tok.startswith(":"):
            name = tok[1:]
            if name in labels:
                raise AsmError(f"duplicate label {name}")
            labels[name] = pc
            i += 1
            continue
        if up == ".HEX":
            raw = bytes.fromhex(toks[i + 1])
            items.append(("raw", raw))
            pc += len(raw)
            i += 2
            continue
        if up.startswith("PUSH") and up != "PUSH0":
            if i + 1 >= len(toks):
                raise AsmError(f"{tok} without operand")
            arg = toks[i + 1]
            if arg.startswith("@"):
                width = 2 if up == "PUSH" else BY_NAME[up].push_width
                items.append(("push", (width, arg[1:])))
            else:
                value = _parse_int(arg)
                width = _width(value) if up == "PUSH" else BY_NAME[up].push_width
                if value >= 1 << (8 * width):
                    raise AsmError(f"{arg} does not fit in {width} bytes")
                items.append(("push", (width, value)))
            pc += 1 + width
            i += 2
            continue
        if up not in BY_NAME:
            raise AsmError(f"unknown mnemonic {tok!r}")
        items.append(("op", up))
        pc += 1
        i += 1
    # pass 2: encode
    out = bytearray()
    for kind, payload in items:
        if kind == "raw":
            out += payload
        elif kind == "op":
            out.append(BY_NAME[payload].byte)
        else:
            width, value = payload
            if isinstance(value, str):
                if value not in labels:
                    raise AsmError(f"undefined label {value}")
                value = labels[value]
            out.append(0x5F + width)
            out += value.to_bytes(width, "big")
    return Assembly(bytes(out), labels)
