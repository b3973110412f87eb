import pytest

from mipswcet import sim
from mipswcet.inputs import InputBinding, Reg
from mipswcet.isa import IType, JType, RType, Unknown
from mipswcet.timing import (NonPositiveCost, TimingModel, TimingSyntaxError,
                             UnknownKey, UnsupportedInstruction, cost,
                             parse_timing_config)

from conftest import load_fixture


ADD = RType("add", 17, 18, 16)
LW = IType("lw", 29, 31, 16)
BEQ = IType("beq", 4, 0, 3)
JAL = JType("jal", 0x100000)
MULT = RType("mult", 4, 5)


def test_default_costs():
    m = TimingModel()
    assert cost(m, ADD, False) == 1
    assert cost(m, LW, False) == 1
    assert cost(m, BEQ, False) == 1
    assert cost(m, BEQ, True) == 1


def test_memory_extra():
    m = TimingModel(memory_access_extra=2)
    assert cost(m, LW, False) == 3
    assert cost(m, ADD, False) == 1


def test_branch_taken_extra_only_on_taken_transfers():
    m = TimingModel(branch_taken_extra=3)
    assert cost(m, BEQ, True) == 4
    assert cost(m, BEQ, False) == 1
    assert cost(m, JAL, True) == 4
    assert cost(m, ADD, True) == 1  # not a control transfer


def test_muldiv_extra():
    m = TimingModel(muldiv_cost=5)
    assert cost(m, MULT, False) == 6
    assert cost(m, RType("mflo", rd=8), False) == 1


def test_unknown_instruction_rejected():
    with pytest.raises(UnsupportedInstruction):
        cost(TimingModel(), Unknown(0xFC000000), False)


def test_parse_empty_is_default():
    assert parse_timing_config("") == TimingModel()


def test_parse_memory_extra():
    m = parse_timing_config("memory_access_extra = 2")
    assert cost(m, LW, False) == 3


def test_parse_full_config():
    text = """
    # device model v2
    cost.lw = 4        # loads are slow
    cost.add = 2
    branch_taken_extra = 1
    muldiv_cost = 8
    """
    m = parse_timing_config(text)
    assert m.base_cost == {"lw": 4, "add": 2}
    assert cost(m, LW, False) == 4
    assert cost(m, ADD, False) == 2
    assert cost(m, BEQ, True) == 2
    assert cost(m, MULT, False) == 9


def test_parse_unknown_key():
    with pytest.raises(UnknownKey):
        parse_timing_config("flux_capacitor = 1")
    with pytest.raises(UnknownKey):
        parse_timing_config("cost.fmadd = 1")


def test_parse_nonpositive():
    with pytest.raises(NonPositiveCost):
        parse_timing_config("cost.add = 0")
    with pytest.raises(NonPositiveCost):
        parse_timing_config("branch_taken_extra = -1")


def test_parse_syntax_error_reports_position():
    with pytest.raises(TimingSyntaxError) as exc:
        parse_timing_config("cost.add = 1\nwhat is this\n")
    assert exc.value.line == 2
    with pytest.raises(TimingSyntaxError) as exc:
        parse_timing_config("cost.add = banana")
    assert exc.value.line == 1
    assert exc.value.col > 1


def test_cost_is_pure():
    m = TimingModel(branch_taken_extra=2)
    assert all(cost(m, BEQ, True) == 3 for _ in range(4))


@pytest.mark.parametrize("fixture,func,regs", [
    ("countdown.elf", "countdown", {4: 7}),
    ("sort4.elf", "sort4", {4: 3, 5: 1, 6: 0, 7: 2}),
    ("muldiv.elf", "muldiv", {4: 9, 5: 4, 6: 2}),
    ("calls3.elf", "main", {4: 11}),
])
@pytest.mark.parametrize("key", ["cost.bne", "cost.addiu", "branch_taken_extra",
                                 "memory_access_extra", "muldiv_cost",
                                 "cost.lw", "cost.jr"])
def test_monotonicity_on_fixture(fixture, func, regs, key):
    """Raising any cost entry never decreases a simulated cycle count."""
    prog = load_fixture(fixture)
    entry = prog.symbols[func]
    binding = InputBinding(tuple((Reg(i), v) for i, v in sorted(regs.items())))
    base = sim.run(prog, parse_timing_config(""), entry, binding, 10_000)
    bumped = sim.run(prog, parse_timing_config(f"{key} = 3"), entry,
                     binding, 10_000)
    assert base.status is sim.RunStatus.FINISHED
    assert bumped.total_cycles >= base.total_cycles
