"""Directed semantic probes: tiny programs branch on a computed value, so
the concrete result, the hand-computed oracle, and the abstract transfer all
have to agree (a wrong value takes the longer arm and changes the time)."""

import pytest

from mipswcet import loader
from mipswcet.absint import (AbsStatus, AbstractBinding, abs_execute,
                             singleton, stage)
from mipswcet.cfg import build_cfg
from mipswcet.inputs import InputBinding, Reg
from mipswcet.sim import Machine, RunStatus
from mipswcet.timing import TimingModel

import eblib
from eblib import I, JR_RA, NOP, R

DEFAULT = TimingModel()
U32 = 0xFFFFFFFF


def probe_program(setup, expected):
    """setup computes $2; the program returns fast only if $2 == expected."""
    instrs = list(setup)
    instrs += [
        I("lui", 0, 9, (expected & U32) >> 16),
        I("ori", 9, 9, expected & 0xFFFF),
        I("beq", 2, 9, 4),        # -> ok (skips the slow arm)
        NOP,
        R("addu", 3, 3, 3),       # slow arm filler
        JR_RA,
        NOP,
        JR_RA,                    # ok arm
        NOP,
    ]
    raw = eblib.program(instrs, symbols={"f": (0, 4 * len(instrs))})
    return loader.load_image(raw), len(setup)


# each case: (description, setup instructions, inputs {reg: value}, expected $2)
CASES = [
    ("sltiu sign-extends then compares unsigned",
     [I("sltiu", 4, 2, (-5) & 0xFFFF)], {4: 0xFFFFFFF8}, 1),
    ("sltiu big unsigned not less than small",
     [I("sltiu", 4, 2, 5)], {4: 0x80000000}, 0),
    ("slti signed compare",
     [I("slti", 4, 2, (-5) & 0xFFFF)], {4: (-8) & U32}, 1),
    ("slt vs sltu disagree on the sign bit",
     [R("slt", 4, 5, 2)], {4: 0x80000000, 5: 1}, 1),
    ("sltu on the same operands",
     [R("sltu", 4, 5, 2)], {4: 0x80000000, 5: 1}, 0),
    ("sra keeps the sign",
     [R("sra", 0, 4, 2, shamt=31)], {4: (-1) & U32}, -1),
    ("srl shifts in zeros",
     [R("srl", 0, 4, 2, shamt=28)], {4: (-1) & U32}, 0xF),
    ("srav masks the amount to five bits",
     [R("srav", 5, 4, 2)], {4: (-64) & U32, 5: 35}, -8),
    ("sllv masks the amount to five bits",
     [R("sllv", 5, 4, 2)], {4: 3, 5: 33}, 6),
    ("andi zero-extends its immediate",
     [I("andi", 4, 2, 0xFFFF)], {4: (-1) & U32}, 0xFFFF),
    ("xori zero-extends its immediate",
     [I("xori", 4, 2, 0xFFFF)], {4: (-1) & U32}, 0xFFFF0000),
    ("nor of zeros is all ones",
     [R("nor", 0, 0, 2)], {}, -1),
    ("addiu sign-extends despite the name",
     [I("addiu", 4, 2, (-1) & 0xFFFF)], {4: 0}, -1),
    ("subu wraps",
     [R("subu", 4, 5, 2)], {4: 0, 5: 1}, -1),
    ("div truncates toward zero (quotient)",
     [R("div", rs=4, rt=5), R("mflo", rd=2)], {4: (-7) & U32, 5: 2}, -3),
    ("div remainder keeps the dividend sign",
     [R("div", rs=4, rt=5), R("mfhi", rd=2)], {4: (-7) & U32, 5: 2}, -1),
    ("mult high word of a negative product",
     [R("mult", rs=4, rt=5), R("mfhi", rd=2)], {4: (-3) & U32, 5: 5}, -1),
    ("multu high word of a large product",
     [R("multu", rs=4, rt=5), R("mfhi", rd=2)],
     {4: 0x80000000, 5: 4}, 2),
    ("lui places the immediate high",
     [I("lui", 0, 2, 0xABCD)], {}, 0xABCD0000 - (1 << 32)),
]


@pytest.mark.parametrize("desc,setup,regs,expected",
                         CASES, ids=[c[0] for c in CASES])
def test_probe(desc, setup, regs, expected):
    prog, n_setup = probe_program(setup, expected)
    machine = Machine(prog, DEFAULT)
    binding = InputBinding(tuple(
        (Reg(r), v) for r, v in sorted(regs.items())))
    res = machine.run(prog.symbols["f"], binding, 1000)
    assert res.status is RunStatus.FINISHED
    # fast arm: setup + lui + ori + beq + nop + jr + nop
    assert res.total_cycles == n_setup + 6, \
        f"{desc}: concrete run took the wrong arm"
    # the abstract transfer must agree exactly on the singleton
    interp = stage(build_cfg(prog, "f"), DEFAULT)
    abstract = AbstractBinding(tuple(
        (Reg(r), singleton(v)) for r, v in sorted(regs.items())))
    abs_res = abs_execute(interp, prog, abstract, 10**6)
    assert abs_res.status is AbsStatus.FINISHED
    assert abs_res.wcet_upper == abs_res.bcet_lower == res.total_cycles, desc
    assert abs_res.exact, desc


def test_probe_memory_bytes():
    """Sub-word loads: sign/zero extension through the abstract memory."""
    data_addr = 0x410000
    data = bytes([0x80, 0x7F, 0xFF, 0x01])
    for mn, offset, expected in [("lb", 0, -128), ("lbu", 0, 128),
                                 ("lb", 2, -1), ("lbu", 2, 255),
                                 ("lh", 0, -32641), ("lhu", 0, 0x807F),
                                 ("lh", 2, -255), ("lhu", 2, 0xFF01)]:
        setup = [
            I("lui", 0, 8, data_addr >> 16),
            I(mn, 8, 2, offset),
        ]
        instrs = list(setup) + [
            I("lui", 0, 9, (expected & U32) >> 16),
            I("ori", 9, 9, expected & 0xFFFF),
            I("beq", 2, 9, 4),
            NOP,
            R("addu", 3, 3, 3),
            JR_RA,
            NOP,
            JR_RA,
            NOP,
        ]
        raw = eblib.program(
            instrs, symbols={"f": (0, 4 * len(instrs))},
            data_sections=[(".data", data_addr, data, True)])
        prog = loader.load_image(raw)
        machine = Machine(prog, DEFAULT)
        res = machine.run(prog.symbols["f"], InputBinding(()), 1000)
        assert res.status is RunStatus.FINISHED
        assert res.total_cycles == len(setup) + 6, (mn, offset)
        interp = stage(build_cfg(prog, "f"), DEFAULT)
        abs_res = abs_execute(interp, prog, AbstractBinding(()), 10**6)
        assert abs_res.wcet_upper == abs_res.bcet_lower == res.total_cycles, \
            (mn, offset)


def test_probe_store_roundtrip():
    """sb/sh merging into words, concretely and abstractly."""
    from mipswcet.sim import STACK_TOP
    base = STACK_TOP - 0x40
    setup = [
        I("lui", 0, 8, base >> 16),
        I("ori", 8, 8, base & 0xFFFF),
        I("lui", 0, 10, 0x1234),
        I("ori", 10, 10, 0x5678),
        I("sw", 8, 10, 0),            # [base] = 0x12345678
        I("addiu", 0, 11, 0xAB),
        I("sb", 8, 11, 1),            # byte 1 -> 0x12AB5678
        I("lw", 8, 2, 0),
    ]
    expected = 0x12AB5678 - (1 << 32)  # signed view of the pattern
    prog, n_setup = probe_program(setup, expected)
    machine = Machine(prog, DEFAULT)
    res = machine.run(prog.symbols["f"], InputBinding(()), 1000)
    assert res.status is RunStatus.FINISHED
    assert res.total_cycles == n_setup + 6
    interp = stage(build_cfg(prog, "f"), DEFAULT)
    abs_res = abs_execute(interp, prog, AbstractBinding(()), 10**6)
    assert abs_res.wcet_upper == abs_res.bcet_lower == res.total_cycles
    assert abs_res.exact
