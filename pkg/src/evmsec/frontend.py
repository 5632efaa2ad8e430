"""Bytecode decoding and retrieval of deployed code over JSON-RPC."""

from __future__ import annotations

import json
import re
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .opcodes import BY_NAME, OPCODES

__all__ = [
    "CodeImage",
    "DecodeError",
    "EmptyCodeError",
    "RawOpcode",
    "RpcError",
    "RpcNetworkError",
    "RpcResponseError",
    "decode_bytecode",
    "fetch_code",
]


class DecodeError(ValueError):
    def __init__(self, position: int, message: str):
        super().__init__(f"byte {position}: {message}")
        self.position = position


@dataclass(frozen=True)
class RawOpcode:
    offset: int
    mnemonic: str
    immediate: bytes = b""

    @property
    def size(self) -> int:
        return 1 + len(self.immediate)

    @property
    def byte(self) -> int:
        return BY_NAME[self.mnemonic].byte

    @property
    def value(self) -> int:
        """Immediate as a big-endian integer (0 for PUSH0 and non-pushes)."""
        return int.from_bytes(self.immediate, "big")

    def encode(self) -> bytes:
        return bytes([self.byte]) + self.immediate

    def __str__(self) -> str:
        if self.immediate:
            return f"{self.offset}: {self.mnemonic} 0x{self.immediate.hex()}"
        return f"{self.offset}: {self.mnemonic}"


@dataclass(frozen=True)
class CodeImage:
    bytes: bytes
    opcodes: tuple[RawOpcode, ...]
    invalid_regions: tuple[tuple[int, int], ...] = ()
    _by_offset: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_offset", {op.offset: op for op in self.opcodes})

    def __len__(self) -> int:
        return len(self.bytes)

    def at(self, offset: int) -> RawOpcode | None:
        return self._by_offset.get(offset)

    def is_jumpdest(self, offset: int) -> bool:
        op = self._by_offset.get(offset)
        return op is not None and op.mnemonic == "JUMPDEST"

    def in_invalid_region(self, offset: int) -> bool:
        return any(a <= offset < b for a, b in self.invalid_regions)

    def encode(self) -> bytes:
        """Reassemble the image; equals ``self.bytes`` by construction."""
        pieces = [(op.offset, op.encode()) for op in self.opcodes]
        pieces += [(a, self.bytes[a:b]) for a, b in self.invalid_regions]
        pieces.sort(key=lambda p: p[0])
        return b"".join(chunk for _, chunk in pieces)


_HEX = re.compile(r"[0-9a-fA-F]*")


def _metadata_start(code: bytes) -> int | None:
    # solc appends a CBOR map followed by its 2-byte big-endian length
    if len(code) < 4:
        return None
    n = int.from_bytes(code[-2:], "big")
    start = len(code) - 2 - n
    if n < 2 or start < 0:
        return None
    head, key = code[start], code[start + 1]
    if 0xA1 <= head <= 0xA5 and 0x61 <= key <= 0x77:
        return start
    return None


def _parse_hex(text: str) -> bytes:
    text = text.strip()
    if text[:2] in ("0x", "0X"):
        text = text[2:]
    m = _HEX.match(text)
    if m.end() != len(text):
        raise DecodeError(m.end() // 2, f"non-hex character {text[m.end()]!r}")
    if len(text) % 2:
        raise DecodeError(len(text) // 2, "odd number of hex digits")
    return bytes.fromhex(text)


def decode_bytecode(hex_text: str | bytes) -> CodeImage:
    """Decode hex text (or raw bytes) into opcodes and invalid regions.

    Never rejects byte content: unknown opcodes, truncated push immediates and
    the compiler metadata trailer are all recorded as invalid regions.
    """
    code = hex_text if isinstance(hex_text, (bytes, bytearray)) else _parse_hex(hex_text)
    code = bytes(code)
    end = _metadata_start(code)
    limit = len(code) if end is None else end
    ops: list[RawOpcode] = []
    invalid: list[tuple[int, int]] = []
    pc = 0
    while pc < limit:
        info = OPCODES.get(code[pc])
        if info is None:
            invalid.append((pc, pc + 1))
            pc += 1
            continue
        width = info.push_width
        if pc + 1 + width > limit:
            invalid.append((pc, limit))
            break
        ops.append(RawOpcode(pc, info.name, code[pc + 1 : pc + 1 + width]))
        pc += 1 + width
    if end is not None:
        invalid.append((end, len(code)))
    return CodeImage(code, tuple(ops), tuple(invalid))


class RpcError(RuntimeError):
    pass


class RpcNetworkError(RpcError):
    pass


class RpcResponseError(RpcError):
    pass


class EmptyCodeError(RpcError):
    def __init__(self, address: str):
        super().__init__(f"no code at {address}")
        self.address = address


_ADDRESS = re.compile(r"^0x[0-9a-fA-F]{40}$")


def fetch_code(rpc_url: str, address: str, timeout: float = 30.0) -> str:
    """Fetch runtime bytecode via ``eth_getCode`` at the latest block."""
    if not _ADDRESS.match(address):
        raise ValueError(f"malformed address {address!r}")
    payload = json.dumps(
        {"jsonrpc": "2.0", "id": 1, "method": "eth_getCode", "params": [address, "latest"]}
    ).encode()
    req = urllib.request.Request(
        rpc_url, data=payload, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            body = json.loads(resp.read().decode())
    except (urllib.error.URLError, OSError) as exc:
        raise RpcNetworkError(f"{rpc_url}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise RpcResponseError(f"invalid JSON from {rpc_url}") from exc
    if "error" in body:
        raise RpcResponseError(str(body["error"]))
    result = body.get("result")
    if not isinstance(result, str):
        raise RpcResponseError(f"unexpected result {result!r}")
    if result in ("0x", ""):
        raise EmptyCodeError(address)
    return result
