"""Decode, encode and render the supported MIPS32 instruction subset.

Instructions are represented as typed variants (RType/IType/JType) with an
``Unknown`` catch-all so whole sections can be decoded up front; only words
that actually execute need to be supported.  ``encode(decode(w)) == w`` holds
for every word whose opcode/funct pair is in the supported table: the decoder
rejects non-canonical encodings (nonzero must-be-zero fields) as Unknown
rather than guessing.
"""

from __future__ import annotations

import enum
from typing import NamedTuple, Union


class RType(NamedTuple):
    mnemonic: str
    rs: int = 0
    rt: int = 0
    rd: int = 0
    shamt: int = 0


class IType(NamedTuple):
    mnemonic: str
    rs: int = 0
    rt: int = 0
    imm16: int = 0  # raw 16-bit pattern; signedness fixed by the mnemonic


class JType(NamedTuple):
    mnemonic: str
    target26: int


class Unknown(NamedTuple):
    word: int


Instruction = Union[RType, IType, JType, Unknown]


class ControlClass(enum.Enum):
    SEQUENTIAL = "sequential"
    COND_BRANCH = "cond-branch"
    UNCOND_JUMP = "uncond-jump"
    CALL = "call"
    INDIRECT_JUMP = "indirect-jump"
    RETURN = "return"
    UNKNOWN = "unknown"


class CannotEncodeUnknown(ValueError):
    """encode() was handed an Unknown instruction."""


# funct -> mnemonic for opcode 0 (SPECIAL)
_R_FUNCT = {
    0x00: "sll", 0x02: "srl", 0x03: "sra",
    0x04: "sllv", 0x06: "srlv", 0x07: "srav",
    0x08: "jr", 0x09: "jalr",
    0x10: "mfhi", 0x12: "mflo",
    0x18: "mult", 0x19: "multu", 0x1A: "div", 0x1B: "divu",
    0x20: "add", 0x21: "addu", 0x22: "sub", 0x23: "subu",
    0x24: "and", 0x25: "or", 0x26: "xor", 0x27: "nor",
    0x2A: "slt", 0x2B: "sltu",
}
_R_FUNCT_REV = {v: k for k, v in _R_FUNCT.items()}

_I_OPCODE = {
    0x04: "beq", 0x05: "bne", 0x06: "blez", 0x07: "bgtz",
    0x08: "addi", 0x09: "addiu", 0x0A: "slti", 0x0B: "sltiu",
    0x0C: "andi", 0x0D: "ori", 0x0E: "xori", 0x0F: "lui",
    0x20: "lb", 0x21: "lh", 0x23: "lw", 0x24: "lbu", 0x25: "lhu",
    0x28: "sb", 0x29: "sh", 0x2B: "sw",
}
_I_OPCODE_REV = {v: k for k, v in _I_OPCODE.items()}

_J_OPCODE = {0x02: "j", 0x03: "jal"}
_J_OPCODE_REV = {v: k for k, v in _J_OPCODE.items()}

# opcode 0x01 (REGIMM): the rt field selects the branch condition
_REGIMM_RT = {0x00: "bltz", 0x01: "bgez"}
_REGIMM_RT_REV = {v: k for k, v in _REGIMM_RT.items()}

SHIFT_CONST = frozenset(["sll", "srl", "sra"])
SHIFT_VAR = frozenset(["sllv", "srlv", "srav"])
MULDIV = frozenset(["mult", "multu", "div", "divu"])
HILO_MOVE = frozenset(["mfhi", "mflo"])
R_ALU = frozenset(["add", "addu", "sub", "subu", "and", "or", "xor", "nor",
                   "slt", "sltu"])
LOADS = frozenset(["lw", "lh", "lhu", "lb", "lbu"])
STORES = frozenset(["sw", "sh", "sb"])
MEMORY = LOADS | STORES
COND_BRANCHES = frozenset(["beq", "bne", "blez", "bgtz", "bltz", "bgez"])

# Mnemonics whose 16-bit immediate sign-extends (addiu included despite its
# name; sltiu sign-extends the immediate but compares unsigned).
SIGN_EXTENDING = frozenset(["addi", "addiu", "slti", "sltiu"]) | MEMORY | COND_BRANCHES
ZERO_EXTENDING = frozenset(["andi", "ori", "xori"])

SUPPORTED_MNEMONICS = (
    frozenset(_R_FUNCT.values())
    | frozenset(_I_OPCODE.values())
    | frozenset(_J_OPCODE.values())
    | frozenset(_REGIMM_RT.values())
)


def decode(word: int) -> Instruction:
    """Decode one 32-bit word; anything outside the supported table is Unknown."""
    opcode = (word >> 26) & 0x3F
    if opcode == 0x00:
        funct = word & 0x3F
        mn = _R_FUNCT.get(funct)
        if mn is None:
            return Unknown(word)
        rs = (word >> 21) & 0x1F
        rt = (word >> 16) & 0x1F
        rd = (word >> 11) & 0x1F
        shamt = (word >> 6) & 0x1F
        # reject non-canonical encodings so decode/encode round-trips
        if mn in SHIFT_CONST:
            if rs != 0:
                return Unknown(word)
        elif mn in SHIFT_VAR:
            if shamt != 0:
                return Unknown(word)
        elif mn == "jr":
            if rt != 0 or rd != 0 or shamt != 0:
                return Unknown(word)
        elif mn == "jalr":
            if rt != 0 or shamt != 0:
                return Unknown(word)
        elif mn in HILO_MOVE:
            if rs != 0 or rt != 0 or shamt != 0:
                return Unknown(word)
        elif mn in MULDIV:
            if rd != 0 or shamt != 0:
                return Unknown(word)
        else:  # three-register ALU ops
            if shamt != 0:
                return Unknown(word)
        return RType(mn, rs, rt, rd, shamt)
    if opcode == 0x01:
        rt = (word >> 16) & 0x1F
        mn = _REGIMM_RT.get(rt)
        if mn is None:
            return Unknown(word)
        return IType(mn, (word >> 21) & 0x1F, rt, word & 0xFFFF)
    mn = _J_OPCODE.get(opcode)
    if mn is not None:
        return JType(mn, word & 0x03FFFFFF)
    mn = _I_OPCODE.get(opcode)
    if mn is not None:
        rs = (word >> 21) & 0x1F
        rt = (word >> 16) & 0x1F
        if mn in ("blez", "bgtz") and rt != 0:
            return Unknown(word)
        if mn == "lui" and rs != 0:
            return Unknown(word)
        return IType(mn, rs, rt, word & 0xFFFF)
    return Unknown(word)


def encode(instr: Instruction) -> int:
    """Produce the unique word that decodes back to ``instr``."""
    if isinstance(instr, RType):
        funct = _R_FUNCT_REV[instr.mnemonic]
        return ((instr.rs & 0x1F) << 21 | (instr.rt & 0x1F) << 16
                | (instr.rd & 0x1F) << 11 | (instr.shamt & 0x1F) << 6 | funct)
    if isinstance(instr, IType):
        mn = instr.mnemonic
        if mn in _REGIMM_RT_REV:
            return (0x01 << 26 | (instr.rs & 0x1F) << 21
                    | _REGIMM_RT_REV[mn] << 16 | instr.imm16 & 0xFFFF)
        opcode = _I_OPCODE_REV[mn]
        return (opcode << 26 | (instr.rs & 0x1F) << 21
                | (instr.rt & 0x1F) << 16 | instr.imm16 & 0xFFFF)
    if isinstance(instr, JType):
        return _J_OPCODE_REV[instr.mnemonic] << 26 | instr.target26 & 0x03FFFFFF
    raise CannotEncodeUnknown(f"cannot encode unknown word 0x{instr.word:08x}")


NOP = RType("sll", 0, 0, 0, 0)


def is_nop(instr: Instruction) -> bool:
    return instr == NOP


def classify(instr: Instruction) -> ControlClass:
    """Terminator class used by CFG construction and the simulators."""
    if isinstance(instr, Unknown):
        return ControlClass.UNKNOWN
    mn = instr.mnemonic
    if mn in COND_BRANCHES:
        return ControlClass.COND_BRANCH
    if mn == "j":
        return ControlClass.UNCOND_JUMP
    if mn in ("jal", "jalr"):
        return ControlClass.CALL
    if mn == "jr":
        return ControlClass.RETURN if instr.rs == 31 else ControlClass.INDIRECT_JUMP
    return ControlClass.SEQUENTIAL


def sign_extend16(imm16: int) -> int:
    return imm16 - 0x10000 if imm16 & 0x8000 else imm16


def branch_target(pc: int, imm16: int) -> int:
    return (pc + 4 + (sign_extend16(imm16) << 2)) & 0xFFFFFFFF


def jump_target(pc: int, target26: int) -> int:
    return ((pc + 4) & 0xF0000000) | (target26 << 2)


def mnemonic_of(instr: Instruction) -> str:
    if isinstance(instr, Unknown):
        return ".word"
    return instr.mnemonic


def disassemble(instr: Instruction, pc: int) -> str:
    """Render conventional assembly text; branch/jump targets as absolute addresses."""
    if isinstance(instr, Unknown):
        return f".word 0x{instr.word:08x}"
    if instr == NOP:
        return "nop"
    mn = instr.mnemonic
    if isinstance(instr, RType):
        if mn in SHIFT_CONST:
            return f"{mn} ${instr.rd}, ${instr.rt}, {instr.shamt}"
        if mn in SHIFT_VAR:
            return f"{mn} ${instr.rd}, ${instr.rt}, ${instr.rs}"
        if mn == "jr":
            return f"jr ${instr.rs}"
        if mn == "jalr":
            if instr.rd == 31:
                return f"jalr ${instr.rs}"
            return f"jalr ${instr.rd}, ${instr.rs}"
        if mn in HILO_MOVE:
            return f"{mn} ${instr.rd}"
        if mn in MULDIV:
            return f"{mn} ${instr.rs}, ${instr.rt}"
        return f"{mn} ${instr.rd}, ${instr.rs}, ${instr.rt}"
    if isinstance(instr, JType):
        return f"{mn} 0x{jump_target(pc, instr.target26):x}"
    # IType
    if mn in ("bltz", "bgez", "blez", "bgtz"):
        return f"{mn} ${instr.rs}, 0x{branch_target(pc, instr.imm16):x}"
    if mn in ("beq", "bne"):
        return f"{mn} ${instr.rs}, ${instr.rt}, 0x{branch_target(pc, instr.imm16):x}"
    if mn in MEMORY:
        return f"{mn} ${instr.rt}, {sign_extend16(instr.imm16)}(${instr.rs})"
    if mn == "lui":
        return f"lui ${instr.rt}, 0x{instr.imm16:x}"
    if mn in ZERO_EXTENDING:
        return f"{mn} ${instr.rt}, ${instr.rs}, 0x{instr.imm16:x}"
    return f"{mn} ${instr.rt}, ${instr.rs}, {sign_extend16(instr.imm16)}"
