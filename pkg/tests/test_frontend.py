import pyevmasm
import pytest
from hypothesis import given, strategies as st

from evmsec.frontend import (
    DecodeError, EmptyCodeError, RpcNetworkError, RpcResponseError, decode_bytecode, fetch_code,
)
from evmsec.opcodes import OPCODES

# opcodes the reference disassembler's fork does not know, or names differently
_REF_FORK = pyevmasm.instruction_tables[pyevmasm.DEFAULT_FORK]
_RENAMED = {"GETPC": "PC"}
_UNKNOWN_TO_REF = {b for b in OPCODES if b not in _REF_FORK}


def reference_ops(code: bytes):
    """(offset, name, immediate) from pyevmasm, with truncated pushes dropped."""
    out = []
    for ins in pyevmasm.disassemble_all(code):
        if ins.pc + ins.size > len(code):
            break
        name = _RENAMED.get(ins.name, ins.name)
        imm = code[ins.pc + 1: ins.pc + ins.size]
        out.append((ins.pc, name, imm))
    return out


def test_push_cross_check():
    img = decode_bytecode("6004")
    assert [(o.offset, o.mnemonic, o.immediate) for o in img.opcodes] == [(0, "PUSH1", b"\x04")]
    assert [(o.offset, o.mnemonic, o.immediate) for o in img.opcodes] == reference_ops(bytes.fromhex("6004"))


def test_empty_and_truncated():
    assert decode_bytecode("").opcodes == ()
    img = decode_bytecode("60")
    assert img.opcodes == () and img.invalid_regions == ((0, 1),)
    img = decode_bytecode("0x6001610a")  # PUSH2 missing a byte
    assert [o.mnemonic for o in img.opcodes] == ["PUSH1"]
    assert img.invalid_regions == ((2, 4),)


@pytest.mark.parametrize("text,pos", [("abc", 1), ("60zz", 1), ("0x6g", 0)])
def test_malformed_hex_reports_position(text, pos):
    with pytest.raises(DecodeError) as e:
        decode_bytecode(text)
    assert e.value.position == pos


def test_unknown_byte_is_invalid_region():
    img = decode_bytecode("fe0c00")  # INVALID (designated), unassigned 0x0c, STOP
    assert ("STOP" in [o.mnemonic for o in img.opcodes])
    assert (1, 2) in img.invalid_regions


def test_metadata_trailer_is_invalid_region():
    trailer = bytes.fromhex("a165627a7a72305820") + bytes(32) + bytes.fromhex("0029")
    code = bytes.fromhex("6001600055") + trailer
    img = decode_bytecode(code.hex())
    assert img.invalid_regions[-1] == (5, len(code))
    assert [o.mnemonic for o in img.opcodes] == ["PUSH1", "PUSH1", "SSTORE"]


@given(st.binary(max_size=300))
def test_round_trip_and_coverage(code):
    img = decode_bytecode(code.hex())
    assert img.encode() == code
    covered = [(o.offset, o.offset + o.size) for o in img.opcodes] + list(img.invalid_regions)
    covered.sort()
    pos = 0
    for a, b in covered:
        assert a == pos and b > a
        pos = b
    assert pos == len(code)
    for o in img.opcodes:
        info = OPCODES[o.byte]
        assert len(o.immediate) == info.push_width


@given(st.binary(max_size=200))
def test_agrees_with_reference_disassembler(code):
    img = decode_bytecode(code.hex())
    # compare only up to the first byte the two tables disagree on, and before any trailer
    limit = min([i for i, b in enumerate(code) if b in _UNKNOWN_TO_REF] + [len(code)])
    if img.invalid_regions and img.invalid_regions[-1][1] == len(code) and img.invalid_regions[-1][0] > 0:
        limit = min(limit, img.invalid_regions[-1][0])
    ref = [r for r in reference_ops(code[:limit]) if r[1] != "INVALID"]
    ours = [(o.offset, o.mnemonic, o.immediate) for o in img.opcodes
            if o.offset + o.size <= limit and o.mnemonic != "INVALID"]
    assert ours == ref


# -- RPC -------------------------------------------------------------------------

def test_fetch_code(node):
    assert fetch_code(node, "0x" + "11" * 20) == "0x6001600055"


def test_fetch_empty_code_is_an_error(node):
    with pytest.raises(EmptyCodeError):
        fetch_code(node, "0x" + "22" * 20)


def test_fetch_rpc_error(node):
    with pytest.raises(RpcResponseError):
        fetch_code(node, "0x" + "33" * 20)


def test_fetch_unreachable():
    with pytest.raises(RpcNetworkError):
        fetch_code("http://127.0.0.1:9", "0x" + "11" * 20, timeout=2)


def test_fetch_rejects_malformed_address():
    with pytest.raises(ValueError):
        fetch_code("http://127.0.0.1:9", "0x1234")
