"""Cycle-accurate concrete simulator for the supported MIPS32 subset.

Branch delay slots are fully modeled: a control transfer at ``p`` latches its
target, the instruction at ``p+4`` executes on the following step, and only
then does control move.  Runs end when the pc reaches a sentinel return
address installed in $ra at init, so "the function returned" is a crisp
event even with nested calls.

A ``Machine`` bundles a loaded program and timing model with prebuilt decode
and cost caches; building it once and reusing it across runs is what makes
exhaustive input-space enumeration tolerable.  Self-modifying code is not
supported (the decode cache is never invalidated).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from . import isa
from .isa import ControlClass, IType, RType, Unknown
from .inputs import InputBinding, Reg
from .loader import LoadedProgram, UnmappedAddress
from .timing import TimingModel, cost

STACK_TOP = 0x7FFF0000
STACK_SIZE = 64 * 1024
EXIT_SENTINEL = 0xFFFFFF00

_U32 = 0xFFFFFFFF
_SBIT = 0x80000000


class FaultKind(enum.Enum):
    UNSUPPORTED_INSTRUCTION = "unsupported-instruction"
    OVERFLOW = "overflow"
    UNMAPPED_ADDRESS = "unmapped-address"
    MISALIGNED_ACCESS = "misaligned-access"
    DIVIDE_BY_ZERO = "divide-by-zero"
    BRANCH_IN_DELAY_SLOT = "branch-in-delay-slot"


class SimFault(Exception):
    def __init__(self, kind: FaultKind, pc: int, detail: str = ""):
        super().__init__(f"{kind.value} at pc=0x{pc:08x}" + (f": {detail}" if detail else ""))
        self.kind = kind
        self.pc = pc


class RunStatus(enum.Enum):
    FINISHED = "finished"
    STEP_BUDGET_EXCEEDED = "step-budget-exceeded"
    FAULT = "fault"


@dataclass(frozen=True)
class RunResult:
    status: RunStatus
    total_cycles: int
    tp_events: tuple[tuple[str, int], ...]
    fault: SimFault | None = None


class MachineState:
    """Mutable per-run state; exclusively owned by one run."""

    __slots__ = ("pc", "regs", "hi", "lo", "mem", "cycles",
                 "tp_events", "in_delay", "delay_target")

    def __init__(self, pc: int):
        self.pc = pc
        self.regs = [0] * 32
        self.hi = 0
        self.lo = 0
        self.mem: dict[int, int] = {}  # byte overlay on top of the initial image
        self.cycles = 0
        self.tp_events: list[tuple[str, int]] = []
        self.in_delay = False
        self.delay_target: int | None = None


def _sign32(v: int) -> int:
    return v - 0x100000000 if v & _SBIT else v


class Machine:
    """A loaded program plus timing model with prebuilt execution caches."""

    def __init__(self, prog: LoadedProgram, model: TimingModel,
                 stack_top: int = STACK_TOP, stack_size: int = STACK_SIZE):
        self.prog = prog
        self.model = model
        self.stack_top = stack_top
        self.stack_lo = stack_top - stack_size
        base: dict[int, int] = {}
        for sec in prog.sections:
            vaddr = sec.vaddr
            for i, b in enumerate(sec.data):
                base[vaddr + i] = b
        self.base_mem = base
        # addr -> (instr, class, cost_not_taken, cost_taken) for executable words
        code: dict[int, tuple] = {}
        for sec in prog.sections:
            if not sec.executable:
                continue
            data = sec.data
            for off in range(0, len(data) - 3, 4):
                word = int.from_bytes(data[off:off + 4], "big")
                instr = isa.decode(word)
                cls = isa.classify(instr)
                if isinstance(instr, Unknown):
                    code[sec.vaddr + off] = (instr, cls, 0, 0)
                else:
                    code[sec.vaddr + off] = (instr, cls,
                                             cost(model, instr, False),
                                             cost(model, instr, True))
        self.code = code

    # -- memory helpers ----------------------------------------------------

    def _mapped(self, addr: int) -> bool:
        return addr in self.base_mem or self.stack_lo <= addr < self.stack_top

    def read_byte(self, state: MachineState, addr: int) -> int:
        v = state.mem.get(addr)
        if v is not None:
            return v
        v = self.base_mem.get(addr)
        if v is not None:
            return v
        if self.stack_lo <= addr < self.stack_top:
            return 0
        raise SimFault(FaultKind.UNMAPPED_ADDRESS, state.pc, f"read 0x{addr:08x}")

    def write_byte(self, state: MachineState, addr: int, value: int) -> None:
        if not self._mapped(addr):
            raise SimFault(FaultKind.UNMAPPED_ADDRESS, state.pc, f"write 0x{addr:08x}")
        state.mem[addr] = value & 0xFF

    def read_word(self, state: MachineState, addr: int) -> int:
        rb = self.read_byte
        return (rb(state, addr) << 24 | rb(state, addr + 1) << 16
                | rb(state, addr + 2) << 8 | rb(state, addr + 3))

    def write_word(self, state: MachineState, addr: int, value: int) -> None:
        wb = self.write_byte
        wb(state, addr, value >> 24)
        wb(state, addr + 1, value >> 16)
        wb(state, addr + 2, value >> 8)
        wb(state, addr + 3, value)

    # -- lifecycle ----------------------------------------------------------

    def init_state(self, entry: int, binding: InputBinding) -> MachineState:
        state = MachineState(entry)
        state.regs[29] = self.stack_top
        state.regs[31] = EXIT_SENTINEL
        for loc, value in binding.materialize():
            if isinstance(loc, Reg):
                state.regs[loc.index] = value
            else:
                if not (self._mapped(loc.addr) and self._mapped(loc.addr + 3)):
                    raise UnmappedAddress(
                        f"input binding at 0x{loc.addr:08x} is outside loaded/stack memory")
                self.write_word(state, loc.addr, value)
        return state

    def step(self, state: MachineState) -> None:
        """Execute one instruction, honoring a pending delay slot."""
        pc = state.pc
        entry = self.code.get(pc)
        if entry is None:
            raise SimFault(FaultKind.UNMAPPED_ADDRESS, pc, "instruction fetch")
        instr, cls, cost_nt, cost_tk = entry
        if cls is ControlClass.UNKNOWN:
            raise SimFault(FaultKind.UNSUPPORTED_INSTRUCTION, pc,
                           f".word 0x{instr.word:08x}")

        in_delay = state.in_delay
        if in_delay and cls is not ControlClass.SEQUENTIAL:
            raise SimFault(FaultKind.BRANCH_IN_DELAY_SLOT, pc)

        regs = state.regs
        taken = False
        target: int | None = None

        if type(instr) is RType:
            mn, rs, rt, rd, shamt = instr
            if mn == "addu":
                val = (regs[rs] + regs[rt]) & _U32
            elif mn == "subu":
                val = (regs[rs] - regs[rt]) & _U32
            elif mn == "add":
                r = _sign32(regs[rs]) + _sign32(regs[rt])
                if r < -0x80000000 or r > 0x7FFFFFFF:
                    raise SimFault(FaultKind.OVERFLOW, pc)
                val = r & _U32
            elif mn == "sub":
                r = _sign32(regs[rs]) - _sign32(regs[rt])
                if r < -0x80000000 or r > 0x7FFFFFFF:
                    raise SimFault(FaultKind.OVERFLOW, pc)
                val = r & _U32
            elif mn == "and":
                val = regs[rs] & regs[rt]
            elif mn == "or":
                val = regs[rs] | regs[rt]
            elif mn == "xor":
                val = regs[rs] ^ regs[rt]
            elif mn == "nor":
                val = ~(regs[rs] | regs[rt]) & _U32
            elif mn == "slt":
                val = 1 if _sign32(regs[rs]) < _sign32(regs[rt]) else 0
            elif mn == "sltu":
                val = 1 if regs[rs] < regs[rt] else 0
            elif mn == "sll":
                val = (regs[rt] << shamt) & _U32
            elif mn == "srl":
                val = regs[rt] >> shamt
            elif mn == "sra":
                val = (_sign32(regs[rt]) >> shamt) & _U32
            elif mn == "sllv":
                val = (regs[rt] << (regs[rs] & 31)) & _U32
            elif mn == "srlv":
                val = regs[rt] >> (regs[rs] & 31)
            elif mn == "srav":
                val = (_sign32(regs[rt]) >> (regs[rs] & 31)) & _U32
            elif mn == "jr":
                taken = True
                target = regs[rs]
                val = None
            elif mn == "jalr":
                taken = True
                target = regs[rs]
                if rd != 0:
                    regs[rd] = (pc + 8) & _U32
                val = None
            elif mn == "mfhi":
                val = state.hi
            elif mn == "mflo":
                val = state.lo
            elif mn == "mult":
                p = _sign32(regs[rs]) * _sign32(regs[rt])
                state.hi = (p >> 32) & _U32
                state.lo = p & _U32
                val = None
            elif mn == "multu":
                p = regs[rs] * regs[rt]
                state.hi = (p >> 32) & _U32
                state.lo = p & _U32
                val = None
            elif mn in ("div", "divu"):
                a = _sign32(regs[rs]) if mn == "div" else regs[rs]
                b = _sign32(regs[rt]) if mn == "div" else regs[rt]
                if b == 0:
                    raise SimFault(FaultKind.DIVIDE_BY_ZERO, pc)
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                state.lo = q & _U32
                state.hi = (a - q * b) & _U32
                val = None
            else:  # pragma: no cover - table is closed
                raise SimFault(FaultKind.UNSUPPORTED_INSTRUCTION, pc, mn)
            if val is not None and rd != 0:
                regs[rd] = val
        elif type(instr) is IType:
            mn, rs, rt, imm = instr
            simm = imm - 0x10000 if imm & 0x8000 else imm
            if mn == "addiu":
                if rt != 0:
                    regs[rt] = (regs[rs] + simm) & _U32
            elif mn == "addi":
                r = _sign32(regs[rs]) + simm
                if r < -0x80000000 or r > 0x7FFFFFFF:
                    raise SimFault(FaultKind.OVERFLOW, pc)
                if rt != 0:
                    regs[rt] = r & _U32
            elif mn == "slti":
                if rt != 0:
                    regs[rt] = 1 if _sign32(regs[rs]) < simm else 0
            elif mn == "sltiu":
                if rt != 0:
                    regs[rt] = 1 if regs[rs] < (simm & _U32) else 0
            elif mn == "andi":
                if rt != 0:
                    regs[rt] = regs[rs] & imm
            elif mn == "ori":
                if rt != 0:
                    regs[rt] = regs[rs] | imm
            elif mn == "xori":
                if rt != 0:
                    regs[rt] = regs[rs] ^ imm
            elif mn == "lui":
                if rt != 0:
                    regs[rt] = (imm << 16) & _U32
            elif mn == "beq":
                taken = regs[rs] == regs[rt]
            elif mn == "bne":
                taken = regs[rs] != regs[rt]
            elif mn == "blez":
                taken = _sign32(regs[rs]) <= 0
            elif mn == "bgtz":
                taken = _sign32(regs[rs]) > 0
            elif mn == "bltz":
                taken = _sign32(regs[rs]) < 0
            elif mn == "bgez":
                taken = _sign32(regs[rs]) >= 0
            elif mn in ("lw", "lh", "lhu", "lb", "lbu"):
                ea = (regs[rs] + simm) & _U32
                if mn == "lw":
                    if ea & 3:
                        raise SimFault(FaultKind.MISALIGNED_ACCESS, pc, f"lw 0x{ea:08x}")
                    v = self.read_word(state, ea)
                elif mn in ("lh", "lhu"):
                    if ea & 1:
                        raise SimFault(FaultKind.MISALIGNED_ACCESS, pc, f"{mn} 0x{ea:08x}")
                    v = self.read_byte(state, ea) << 8 | self.read_byte(state, ea + 1)
                    if mn == "lh" and v & 0x8000:
                        v -= 0x10000
                else:
                    v = self.read_byte(state, ea)
                    if mn == "lb" and v & 0x80:
                        v -= 0x100
                if rt != 0:
                    regs[rt] = v & _U32
            elif mn in ("sw", "sh", "sb"):
                ea = (regs[rs] + simm) & _U32
                v = regs[rt]
                if mn == "sw":
                    if ea & 3:
                        raise SimFault(FaultKind.MISALIGNED_ACCESS, pc, f"sw 0x{ea:08x}")
                    self.write_word(state, ea, v)
                elif mn == "sh":
                    if ea & 1:
                        raise SimFault(FaultKind.MISALIGNED_ACCESS, pc, f"sh 0x{ea:08x}")
                    self.write_byte(state, ea, v >> 8)
                    self.write_byte(state, ea + 1, v)
                else:
                    self.write_byte(state, ea, v)
            else:  # pragma: no cover - table is closed
                raise SimFault(FaultKind.UNSUPPORTED_INSTRUCTION, pc, mn)
            if cls is ControlClass.COND_BRANCH and taken:
                target = isa.branch_target(pc, imm)
        else:  # JType
            mn = instr.mnemonic
            taken = True
            target = isa.jump_target(pc, instr.target26)
            if mn == "jal":
                regs[31] = (pc + 8) & _U32

        state.cycles += cost_tk if taken else cost_nt

        if in_delay:
            state.in_delay = False
            nxt = state.delay_target
            state.delay_target = None
            state.pc = nxt if nxt is not None else (pc + 4) & _U32
        elif cls is not ControlClass.SEQUENTIAL:
            # the next step executes the delay slot, then control transfers
            state.in_delay = True
            state.delay_target = target if taken else None
            state.pc = (pc + 4) & _U32
        else:
            state.pc = (pc + 4) & _U32

    def run(self, entry: int, binding: InputBinding, step_budget: int,
            tp_table: dict[str, int] | None = None,
            trace: list[tuple[int, str, int]] | None = None) -> RunResult:
        if step_budget <= 0:
            raise ValueError("step_budget must be positive")
        state = self.init_state(entry, binding)
        tp_by_addr: dict[int, list[str]] = {}
        if tp_table:
            for tp_id in sorted(tp_table):
                tp_by_addr.setdefault(tp_table[tp_id], []).append(tp_id)
        steps = 0
        code = self.code
        try:
            while True:
                pc = state.pc
                if pc == EXIT_SENTINEL:
                    return RunResult(RunStatus.FINISHED, state.cycles,
                                     tuple(state.tp_events))
                if steps >= step_budget:
                    return RunResult(RunStatus.STEP_BUDGET_EXCEEDED, state.cycles,
                                     tuple(state.tp_events))
                if tp_by_addr:
                    ids = tp_by_addr.get(pc)
                    if ids is not None:
                        cyc = state.cycles
                        for tp_id in ids:
                            state.tp_events.append((tp_id, cyc))
                self.step(state)
                steps += 1
                if trace is not None:
                    entry_t = code.get(pc)
                    trace.append((pc, isa.mnemonic_of(entry_t[0]), state.cycles))
        except SimFault as fault:
            return RunResult(RunStatus.FAULT, state.cycles,
                             tuple(state.tp_events), fault=fault)


def format_trace_line(pc: int, mnemonic: str, cycles_after: int) -> str:
    return f"0x{pc:08x} {mnemonic} {cycles_after}"


# one-shot conveniences matching the per-operation contracts

def init_state(prog: LoadedProgram, entry: int, binding: InputBinding,
               model: TimingModel | None = None) -> MachineState:
    return Machine(prog, model or TimingModel()).init_state(entry, binding)


def step(state: MachineState, prog: LoadedProgram, model: TimingModel) -> MachineState:
    Machine(prog, model).step(state)
    return state


def run(prog: LoadedProgram, model: TimingModel, entry: int, binding: InputBinding,
        step_budget: int, tp_table: dict[str, int] | None = None,
        trace: list[tuple[int, str, int]] | None = None) -> RunResult:
    return Machine(prog, model).run(entry, binding, step_budget, tp_table, trace)
