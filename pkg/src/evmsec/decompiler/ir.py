"""Stack-free SSA instructions and the control-flow graph that holds them."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..frontend import CodeImage
from .evm import MASK


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class Const:
    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value & MASK)

    def __str__(self) -> str:
        return str(self.value) if self.value < 1 << 32 else hex(self.value)


class _Top:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "Top"

    def __str__(self) -> str:
        return "top"

    def __reduce__(self):
        return (_Top, ())


Top = _Top()
Value = Var | Const | _Top

# opcodes whose execution has effects beyond defining their result
SIDE_EFFECTS = frozenset(
    {
        "mstore", "mstore8", "sstore", "tstore", "calldatacopy", "codecopy", "extcodecopy",
        "returndatacopy", "mcopy", "log0", "log1", "log2", "log3", "log4",
        "call", "callcode", "delegatecall", "staticcall", "create", "create2",
        "goto", "stop", "return", "revert", "throw", "selfdestruct", "jumpdest",
    }
)
TERMINATORS = frozenset({"goto", "stop", "return", "revert", "throw", "selfdestruct"})


@dataclass(frozen=True)
class SsaInstruction:
    label: str
    offset: int
    opcode: str
    result: str | None = None
    args: tuple = ()
    target: str | None = None  # goto only: label of the taken branch, or None if several

    @property
    def has_side_effect(self) -> bool:
        return self.opcode in SIDE_EFFECTS or self.result is None

    def uses(self):
        return [a.name for a in self.args if isinstance(a, Var)]

    def with_args(self, args) -> "SsaInstruction":
        return replace(self, args=tuple(args))

    def __str__(self) -> str:
        res = f"{self.result} = " if self.result else ""
        args = ", ".join(str(a) for a in self.args)
        tgt = f" -> {self.target or 'top'}" if self.opcode == "goto" else ""
        return f"{self.label}: {res}{self.opcode}({args}){tgt}"


@dataclass(frozen=True)
class Block:
    id: str
    start: int
    instructions: tuple[SsaInstruction, ...]
    ctx: tuple = ()

    @property
    def first_label(self) -> str | None:
        return self.instructions[0].label if self.instructions else None

    @property
    def last_label(self) -> str | None:
        return self.instructions[-1].label if self.instructions else None


@dataclass(frozen=True)
class MethodTable:
    selectors: dict[int, str]
    fallback: str
    dispatch_labels: frozenset[str] = frozenset()
    malformed: bool = False

    def selector_of(self, block: str) -> int | None:
        for sel, b in self.selectors.items():
            if b == block:
                return sel
        return None


@dataclass(frozen=True)
class Cfg:
    code: CodeImage
    blocks: dict[str, Block]
    entry: str
    edges: dict[str, tuple[str, ...]]
    join_points: frozenset[tuple[str, str]] = frozenset()
    flags: frozenset[str] = frozenset()
    methods: MethodTable | None = None
    stats: dict = field(default_factory=dict, compare=False)

    def instructions(self):
        for b in self.blocks.values():
            yield from b.instructions

    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {b: [] for b in self.blocks}
        for src, dsts in self.edges.items():
            for d in dsts:
                preds[d].append(src)
        return preds

    def with_blocks(self, blocks: dict[str, Block], **kw) -> "Cfg":
        return replace(self, blocks=blocks, **kw)

    def by_label(self) -> dict[str, SsaInstruction]:
        return {i.label: i for i in self.instructions()}
