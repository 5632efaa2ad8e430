"""Assemble every ``fixtures/<name>/code.asm`` into the checked-in ``code.hex``.

Also (re)generates the ``perf-large`` source, a many-method contract sized
to sit just under the 2,000 SSA-instruction envelope.

    python3 scripts/build_fixtures.py [--check] [--methods N]
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from evmsec.asm import assemble

ROOT = Path(__file__).resolve().parents[1] / "fixtures"


@dataclass(frozen=True)
class PerfConfig:
    methods: int = 100
    name: str = "perf-large"
    selector_base: int = 0x10000000


def perf_source(cfg: PerfConfig) -> str:
    """One dispatcher entry per method; each method updates a caller-keyed
    balance, forwards an amount to the caller, checks the result and records
    a marker in a fixed slot."""
    lines = [
        f"; Generated by scripts/build_fixtures.py ({cfg.methods} methods).",
        "PUSH1 0 CALLDATALOAD PUSH1 0xe0 SHR",
    ]
    for i in range(cfg.methods):
        lines.append(f"DUP1 PUSH4 {cfg.selector_base + i:#010x} EQ PUSH @m{i} JUMPI")
    lines.append("PUSH1 0 DUP1 REVERT")
    for i in range(cfg.methods):
        slot, marker = 1 + i % 200, 0x200 + i
        lines += [
            f":m{i} JUMPDEST",
            f"CALLER PUSH1 0 MSTORE PUSH1 {slot} PUSH1 32 MSTORE PUSH1 64 PUSH1 0 SHA3",
            "DUP1 SLOAD PUSH1 4 CALLDATALOAD ADD SWAP1 SSTORE",
            "PUSH1 0 DUP1 DUP1 DUP1 PUSH1 36 CALLDATALOAD CALLER GAS CALL",
            "ISZERO PUSH @fail JUMPI",
            f"PUSH1 {i % 256} PUSH2 {marker:#06x} SSTORE STOP",
        ]
    lines.append(":fail JUMPDEST PUSH1 0 DUP1 REVERT")
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="fail if any code.hex is stale")
    ap.add_argument("--methods", type=int, default=PerfConfig.methods)
    args = ap.parse_args(argv)

    perf = PerfConfig(methods=args.methods)
    perf_dir = ROOT / perf.name
    perf_dir.mkdir(exist_ok=True)
    src = perf_source(perf)
    stale = []
    perf_asm = perf_dir / "code.asm"
    if not args.check:
        perf_asm.write_text(src)
    elif not perf_asm.is_file() or perf_asm.read_text() != src:
        stale.append(f"{perf.name}/code.asm")
    for asm in sorted(ROOT.glob("*/code.asm")):
        hexcode = assemble(asm.read_text()).hex + "\n"
        target = asm.with_name("code.hex")
        if target.is_file() and target.read_text() == hexcode:
            continue
        stale.append(asm.parent.name)
        if not args.check:
            target.write_text(hexcode)
    verb = "stale" if args.check else "written"
    print(f"{len(stale)} file(s) {verb}" + (f": {', '.join(stale)}" if stale else ""))
    return 1 if args.check and stale else 0


if __name__ == "__main__":
    raise SystemExit(main())
