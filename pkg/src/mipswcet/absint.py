"""Staged abstract interpretation over the interval domain.

``stage`` compiles a CFG once into per-basic-block transfer functions (field
extraction, cost lookup and successor wiring all done up front); each block
function takes an abstract state and a continuation dispatcher, so repeated
executions (the search runs thousands) reuse the staged table without
re-decoding anything.  ``unstaged`` provides the reference route: a direct
per-instruction interpreter over the same CFG, used to cross-check that
staging is semantically transparent.

Execution accumulates a [lo, hi] time interval per path.  Indeterminate
branches fork into both refined outcomes (clearing the exactness flag);
loops simply unroll, and any state whose lower time bound reaches the
max-time budget is cut, which is what bounds the exploration.  A result is
``exact`` only if no join, no Top introduction, no weak memory update and no
indeterminate branch happened on the surviving paths and all terminal times
agree; that is the license the search needs to accept an upper bound as
tight.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

from . import cfg as cfgmod
from . import intervals as iv
from .cfg import BasicBlock, Cfg
from .inputs import Location, Reg
from .intervals import (  # re-exported domain surface
    BOTTOM, TOP, Interval, Kind, View,
    iv_add, iv_and, iv_div, iv_join, iv_le, iv_meet, iv_mult, iv_nor, iv_or,
    iv_shift, iv_slt, iv_sltu, iv_sub, iv_xor, refine_branch, signed,
    singleton, unsigned, contains_word, as_view,
)
from .isa import ControlClass, IType, RType, Unknown
from .loader import LoadedProgram
from .sim import EXIT_SENTINEL, STACK_SIZE, STACK_TOP
from .timing import TimingModel, cost

_U32 = 0xFFFFFFFF
_U64 = (1 << 64) - 1

__all__ = [
    "AbsResult", "AbsState", "AbstractBinding", "MergePolicy", "StorePolicy",
    "AbsintError", "UnsupportedInstruction", "UnresolvableMemoryWrite",
    "CallDepthExceeded", "ImpreciseReturn", "stage", "unstaged", "abs_execute",
    "BOTTOM", "TOP", "Interval", "Kind", "View", "iv_add", "iv_sub", "iv_and",
    "iv_or", "iv_xor", "iv_nor", "iv_shift", "iv_slt", "iv_sltu", "iv_mult",
    "iv_div", "iv_join", "iv_meet", "iv_le", "refine_branch", "signed",
    "unsigned", "singleton", "contains_word", "as_view",
]


class AbsintError(Exception):
    pass


class UnsupportedInstruction(AbsintError):
    pass


class UnresolvableMemoryWrite(AbsintError):
    pass


class CallDepthExceeded(AbsintError):
    pass


class ImpreciseReturn(AbsintError):
    """$ra is not a known singleton at a return; refusing to guess."""


class MergePolicy(enum.Enum):
    NONE = "none"
    BLOCK_ENTRY = "block-entry"


class StorePolicy(enum.Enum):
    SMASH = "smash"
    FAIL = "fail"


class AbsStatus(enum.Enum):
    FINISHED = "finished"
    BUDGET_EXCEEDED = "budget-exceeded"


@dataclass(frozen=True)
class AbstractBinding:
    """Interval values for input locations (the abstract twin of InputBinding)."""

    items: tuple[tuple[Location, Interval], ...]

    def is_singleton(self) -> bool:
        return all(v.is_singleton() for _, v in self.items)

    def __str__(self) -> str:
        return ", ".join(f"{loc}={val}" for loc, val in self.items) or "(empty)"


@dataclass(frozen=True)
class AbsResult:
    status: AbsStatus
    wcet_upper: int
    bcet_lower: int
    exact: bool
    states_explored: int


_WEAK_SPAN_WORDS = 64


class _MemImage:
    """Word-granular view of a program's initial memory plus the stack."""

    def __init__(self, prog: LoadedProgram):
        self.prog = prog
        self.stack_lo = STACK_TOP - STACK_SIZE
        self.stack_hi = STACK_TOP
        self._cache: dict[int, Interval] = {}

    def initial_word(self, addr: int) -> Interval:
        got = self._cache.get(addr)
        if got is not None:
            return got
        sec = self.prog.section_at(addr)
        if sec is not None and addr + 4 <= sec.end:
            off = addr - sec.vaddr
            word = int.from_bytes(sec.data[off:off + 4], "big")
            result = singleton(word)
        elif self.stack_lo <= addr and addr + 4 <= self.stack_hi:
            result = iv.ZERO
        else:
            result = TOP  # unmapped: the concrete run would fault here
        self._cache[addr] = result
        return result


_MEM_IMAGES: dict[int, _MemImage] = {}


def _mem_image(prog: LoadedProgram) -> _MemImage:
    img = _MEM_IMAGES.get(id(prog))
    if img is None or img.prog is not prog:
        img = _MemImage(prog)
        _MEM_IMAGES[id(prog)] = img
    return img


class AbsState:
    """One abstract execution state: registers, memory overlay, time, flags."""

    __slots__ = ("func", "block", "regs", "hi", "lo", "mem", "smashed",
                 "time_lo", "time_hi", "exact", "frames", "path_hash")

    def __init__(self):
        self.func = 0
        self.block = 0
        self.regs: list[Interval] = [iv.ZERO] * 32
        self.hi = iv.ZERO
        self.lo = iv.ZERO
        self.mem: dict[int, Interval] = {}
        self.smashed = False
        self.time_lo = 0
        self.time_hi = 0
        self.exact = True
        self.frames: tuple[tuple[int, int], ...] = ()  # (caller func, return block)
        self.path_hash = 0

    @property
    def call_depth(self) -> int:
        return len(self.frames)

    def clone(self) -> "AbsState":
        s = AbsState.__new__(AbsState)
        s.func = self.func
        s.block = self.block
        s.regs = list(self.regs)
        s.hi = self.hi
        s.lo = self.lo
        s.mem = dict(self.mem)
        s.smashed = self.smashed
        s.time_lo = self.time_lo
        s.time_hi = self.time_hi
        s.exact = self.exact
        s.frames = self.frames
        s.path_hash = self.path_hash
        return s

    def same_values(self, other: "AbsState") -> bool:
        """Equal in everything but accumulated time (futures coincide)."""
        return (self.smashed == other.smashed and self.exact == other.exact
                and self.regs == other.regs and self.hi == other.hi
                and self.lo == other.lo and self.mem == other.mem)

    def identical(self, other: "AbsState") -> bool:
        return (self.same_values(other) and self.time_lo == other.time_lo
                and self.time_hi == other.time_hi)

    def set_reg(self, idx: int, value: Interval) -> None:
        if idx:
            self.regs[idx] = value
            if value.kind is Kind.TOP:
                self.exact = False

    # -- abstract memory ---------------------------------------------------

    def _word_at(self, img: _MemImage, addr: int) -> Interval:
        if self.smashed:
            return TOP
        got = self.mem.get(addr)
        return got if got is not None else img.initial_word(addr)

    def _addr_span(self, ea: Interval) -> tuple[int, int] | None:
        """Aligned word span covered by an address interval, None if unusable."""
        if ea.kind is not Kind.RANGE:
            return None
        lo = (ea.lo & _U32) & ~3
        hi = (ea.hi & _U32) & ~3
        if hi < lo:  # address interval wraps 2^32
            return None
        return lo, hi

    def load_word(self, img: _MemImage, ea: Interval) -> Interval:
        span = self._addr_span(ea)
        if span is None:
            self.exact = False
            return TOP
        lo, hi = span
        if ea.is_singleton():
            if (ea.lo & _U32) & 3:
                self.exact = False
                return TOP  # the concrete run faults (misaligned)
            return self._word_at(img, lo)
        if (hi - lo) // 4 + 1 > _WEAK_SPAN_WORDS:
            self.exact = False
            return TOP
        out = BOTTOM
        for addr in range(lo, hi + 1, 4):
            out = iv_join(out, self._word_at(img, addr))
        self.exact = False
        return out

    def load_sub(self, img: _MemImage, ea: Interval, width: int,
                 sign: bool) -> Interval:
        if ea.is_singleton():
            addr = ea.lo & _U32
            if width == 16 and addr & 1:
                self.exact = False
                return TOP
            word = self._word_at(img, addr & ~3)
            if word.is_singleton():
                w = word.lo & _U32
                shift = (3 - (addr & 3)) * 8 if width == 8 else (2 - (addr & 2)) * 8
                mask = 0xFF if width == 8 else 0xFFFF
                v = (w >> shift) & mask
                if sign and v & (1 << (width - 1)):
                    v -= 1 << width
                return singleton(v)
        self.exact = False
        if sign:
            return signed(-(1 << (width - 1)), (1 << (width - 1)) - 1)
        return unsigned(0, (1 << width) - 1)

    def store_word(self, img: _MemImage, ea: Interval, value: Interval,
                   policy: StorePolicy) -> None:
        span = self._addr_span(ea)
        if ea.is_singleton() and span is not None and not (ea.lo & _U32) & 3:
            if not self.smashed:
                self.mem[span[0]] = value
                if value.kind is Kind.TOP:
                    self.exact = False
            return
        self._spread_store(img, span, value, policy)

    def store_sub(self, img: _MemImage, ea: Interval, value: Interval,
                  width: int, policy: StorePolicy) -> None:
        if ea.is_singleton():
            addr = ea.lo & _U32
            if width == 16 and addr & 1:
                self.exact = False
                return  # concrete run faults; nothing to record
            waddr = addr & ~3
            old = self._word_at(img, waddr)
            if old.is_singleton() and value.is_singleton() and not self.smashed:
                w = old.lo & _U32
                v = value.lo & _U32
                shift = (3 - (addr & 3)) * 8 if width == 8 else (2 - (addr & 2)) * 8
                mask = (0xFF if width == 8 else 0xFFFF) << shift
                self.mem[waddr] = singleton((w & ~mask) | ((v << shift) & mask))
                return
            if not self.smashed:
                self.mem[waddr] = TOP
            self.exact = False
            return
        self._spread_store(img, self._addr_span(ea), TOP, policy)

    def _spread_store(self, img: _MemImage, span, value: Interval,
                      policy: StorePolicy) -> None:
        self.exact = False
        if self.smashed:
            return
        if span is not None and (span[1] - span[0]) // 4 + 1 <= _WEAK_SPAN_WORDS:
            lo, hi = span
            for addr in range(lo, hi + 1, 4):
                self.mem[addr] = iv_join(self._word_at(img, addr), value)
            return
        if policy is StorePolicy.FAIL:
            raise UnresolvableMemoryWrite(
                "store address interval too wide to resolve")
        self.mem.clear()
        self.smashed = True


def _join_states(a: AbsState, b: AbsState, img: _MemImage) -> AbsState:
    """Join at a block entry; exactness survives only for identical states."""
    out = a.clone()
    if a.identical(b):
        return out
    out.regs = [iv_join(x, y) for x, y in zip(a.regs, b.regs)]
    out.hi = iv_join(a.hi, b.hi)
    out.lo = iv_join(a.lo, b.lo)
    if a.smashed or b.smashed:
        out.mem = {}
        out.smashed = True
    else:
        merged = {}
        for addr in a.mem.keys() | b.mem.keys():
            merged[addr] = iv_join(a._word_at(img, addr), b._word_at(img, addr))
        out.mem = merged
    out.time_lo = min(a.time_lo, b.time_lo)
    out.time_hi = max(a.time_hi, b.time_hi)
    out.exact = False
    return out


# ---------------------------------------------------------------------------
# per-instruction transfer: staged (closure compiler) and unstaged (direct)
# ---------------------------------------------------------------------------

def _mult_hilo(a: Interval, b: Interval, unsigned_op: bool) -> tuple[Interval, Interval]:
    if a.kind is Kind.BOTTOM or b.kind is Kind.BOTTOM:
        return BOTTOM, BOTTOM
    pl, ph = iv.mult_product_bounds(a, b, unsigned_op)
    if pl == ph:  # singleton product: split into the exact hi/lo words
        return singleton((pl >> 32) & _U32), singleton(pl & _U32)
    if -(1 << 31) <= pl and ph <= (1 << 31) - 1:
        lo_iv = signed(pl, ph)
    elif 0 <= pl and ph <= _U32:
        lo_iv = unsigned(pl, ph)
    else:
        lo_iv = TOP
    hl, hh = pl >> 32, ph >> 32
    if -(1 << 31) <= hl and hh <= (1 << 31) - 1:
        hi_iv = signed(hl, hh)
    elif 0 <= hl and hh <= _U32:
        hi_iv = unsigned(hl, hh)
    else:
        hi_iv = TOP
    return hi_iv, lo_iv


def _sign16(imm: int) -> int:
    return imm - 0x10000 if imm & 0x8000 else imm


def _compile_sequential(instr):
    """Stage one non-control instruction into a closure over (state, img, policy)."""
    if isinstance(instr, RType):
        mn, rs, rt, rd, shamt = instr
        if mn in ("add", "addu"):
            def op(st, img, policy):
                st.set_reg(rd, iv_add(st.regs[rs], st.regs[rt]))
        elif mn in ("sub", "subu"):
            def op(st, img, policy):
                st.set_reg(rd, iv_sub(st.regs[rs], st.regs[rt]))
        elif mn == "and":
            def op(st, img, policy):
                st.set_reg(rd, iv_and(st.regs[rs], st.regs[rt]))
        elif mn == "or":
            def op(st, img, policy):
                st.set_reg(rd, iv_or(st.regs[rs], st.regs[rt]))
        elif mn == "xor":
            def op(st, img, policy):
                st.set_reg(rd, iv_xor(st.regs[rs], st.regs[rt]))
        elif mn == "nor":
            def op(st, img, policy):
                st.set_reg(rd, iv_nor(st.regs[rs], st.regs[rt]))
        elif mn == "slt":
            def op(st, img, policy):
                st.set_reg(rd, iv_slt(st.regs[rs], st.regs[rt]))
        elif mn == "sltu":
            def op(st, img, policy):
                st.set_reg(rd, iv_sltu(st.regs[rs], st.regs[rt]))
        elif mn in ("sll", "srl", "sra"):
            amt = singleton(shamt)

            def op(st, img, policy, _mn=mn, _amt=amt):
                st.set_reg(rd, iv_shift(st.regs[rt], _amt, _mn))
        elif mn in ("sllv", "srlv", "srav"):
            base = mn[:3]

            def op(st, img, policy, _mn=base):
                st.set_reg(rd, iv_shift(st.regs[rt], st.regs[rs], _mn))
        elif mn in ("mult", "multu"):
            u = mn == "multu"

            def op(st, img, policy, _u=u):
                hi_iv, lo_iv = _mult_hilo(st.regs[rs], st.regs[rt], _u)
                st.hi = hi_iv
                st.lo = lo_iv
                if hi_iv.kind is Kind.TOP or lo_iv.kind is Kind.TOP:
                    st.exact = False
        elif mn in ("div", "divu"):
            u = mn == "divu"

            def op(st, img, policy, _u=u):
                q = iv_div(st.regs[rs], st.regs[rt], _u)
                r = iv.div_remainder(st.regs[rs], st.regs[rt], _u)
                st.lo = q
                st.hi = r
                if q.kind is Kind.TOP or r.kind is Kind.TOP:
                    st.exact = False
        elif mn == "mfhi":
            def op(st, img, policy):
                st.set_reg(rd, st.hi)
        elif mn == "mflo":
            def op(st, img, policy):
                st.set_reg(rd, st.lo)
        else:
            raise UnsupportedInstruction(f"{mn} cannot appear mid-block")
        return op
    if isinstance(instr, IType):
        mn, rs, rt, imm = instr
        simm = _sign16(imm)
        if mn in ("addi", "addiu"):
            k = singleton(simm)

            def op(st, img, policy, _k=k):
                st.set_reg(rt, iv_add(st.regs[rs], _k))
        elif mn == "slti":
            k = singleton(simm)

            def op(st, img, policy, _k=k):
                st.set_reg(rt, iv_slt(st.regs[rs], _k))
        elif mn == "sltiu":
            k = singleton(simm, View.UNSIGNED)

            def op(st, img, policy, _k=k):
                st.set_reg(rt, iv_sltu(st.regs[rs], _k))
        elif mn in ("andi", "ori", "xori"):
            k = singleton(imm, View.UNSIGNED)
            fn = {"andi": iv_and, "ori": iv_or, "xori": iv_xor}[mn]

            def op(st, img, policy, _k=k, _fn=fn):
                st.set_reg(rt, _fn(st.regs[rs], _k))
        elif mn == "lui":
            k = singleton(imm << 16)

            def op(st, img, policy, _k=k):
                st.set_reg(rt, _k)
        elif mn == "lw":
            k = singleton(simm)

            def op(st, img, policy, _k=k):
                st.set_reg(rt, st.load_word(img, iv_add(st.regs[rs], _k)))
        elif mn in ("lh", "lhu", "lb", "lbu"):
            k = singleton(simm)
            width = 16 if mn in ("lh", "lhu") else 8
            sign = mn in ("lh", "lb")

            def op(st, img, policy, _k=k, _w=width, _s=sign):
                st.set_reg(rt, st.load_sub(img, iv_add(st.regs[rs], _k), _w, _s))
        elif mn == "sw":
            k = singleton(simm)

            def op(st, img, policy, _k=k):
                st.store_word(img, iv_add(st.regs[rs], _k), st.regs[rt], policy)
        elif mn in ("sh", "sb"):
            k = singleton(simm)
            width = 16 if mn == "sh" else 8

            def op(st, img, policy, _k=k, _w=width):
                st.store_sub(img, iv_add(st.regs[rs], _k), st.regs[rt], _w, policy)
        else:
            raise UnsupportedInstruction(f"{mn} cannot appear mid-block")
        return op
    raise UnsupportedInstruction(f"cannot stage {instr!r}")


class _Terminator:
    __slots__ = ("kind", "mnemonic", "rs", "rt", "taken_target", "fall_target",
                 "cost_taken", "cost_not", "delay_op", "delay_cost", "callee",
                 "ret_addr")

    def __init__(self, **kw):
        for name in self.__slots__:
            setattr(self, name, kw.get(name))


class _StagedBlock:
    __slots__ = ("lin_ops", "lin_cost", "term")

    def __init__(self, lin_ops, lin_cost, term):
        self.lin_ops = lin_ops
        self.lin_cost = lin_cost
        self.term = term


def _build_staged_block(block: BasicBlock, model: TimingModel) -> _StagedBlock:
    if block.terminator is ControlClass.SEQUENTIAL:
        body = block.instrs
        delay = None
        transfer = None
    else:
        body = block.instrs[:-2]
        transfer = block.instrs[-2]
        delay = block.instrs[-1]
    for ins in block.instrs:
        if isinstance(ins, Unknown):
            raise UnsupportedInstruction(
                f"unknown word 0x{ins.word:08x} in block 0x{block.start:08x}")
    lin_ops = tuple(_compile_sequential(ins) for ins in body)
    lin_cost = sum(cost(model, ins, False) for ins in body)
    if block.terminator is ControlClass.SEQUENTIAL:
        term = _Terminator(kind="seq", fall_target=block.succs[0])
    else:
        delay_op = _compile_sequential(delay)
        delay_cost = cost(model, delay, False)
        if block.terminator is ControlClass.COND_BRANCH:
            term = _Terminator(
                kind="branch", mnemonic=transfer.mnemonic, rs=transfer.rs,
                rt=transfer.rt if transfer.mnemonic in ("beq", "bne") else None,
                taken_target=block.succs[0], fall_target=block.succs[1],
                cost_taken=cost(model, transfer, True),
                cost_not=cost(model, transfer, False),
                delay_op=delay_op, delay_cost=delay_cost)
        elif block.terminator is ControlClass.UNCOND_JUMP:
            term = _Terminator(kind="jump", taken_target=block.succs[0],
                               cost_taken=cost(model, transfer, True),
                               delay_op=delay_op, delay_cost=delay_cost)
        elif block.terminator is ControlClass.CALL:
            term = _Terminator(kind="call", callee=block.callee,
                               ret_addr=block.succs[0],
                               cost_taken=cost(model, transfer, True),
                               delay_op=delay_op, delay_cost=delay_cost)
        else:  # RETURN
            term = _Terminator(kind="ret",
                               cost_taken=cost(model, transfer, True),
                               delay_op=delay_op, delay_cost=delay_cost)
    return _StagedBlock(lin_ops, lin_cost, term)


def _run_staged_block(sb: _StagedBlock, st: AbsState, img: _MemImage,
                      policy: StorePolicy, emit) -> None:
    """Execute one staged block; ``emit(state, kind, arg)`` is the continuation."""
    for op in sb.lin_ops:
        op(st, img, policy)
    st.time_lo += sb.lin_cost
    st.time_hi += sb.lin_cost
    term = sb.term
    kind = term.kind
    if kind == "seq":
        emit(st, "goto", term.fall_target)
        return
    if kind == "branch":
        sa = st.regs[term.rs]
        sb_iv = st.regs[term.rt] if term.rt is not None else None
        taken, not_taken = refine_branch(term.mnemonic, sa, sb_iv)
        fork = taken is not None and not_taken is not None
        if fork:
            st.exact = False
        for outcome, refined, extra, target in (
                ("taken", taken, term.cost_taken, term.taken_target),
                ("fall", not_taken, term.cost_not, term.fall_target)):
            if refined is None:
                continue
            s2 = st.clone() if fork and outcome == "taken" else st
            s2.set_reg(term.rs, refined[0])
            if term.rt is not None:
                s2.set_reg(term.rt, refined[1])
            s2.time_lo += extra
            s2.time_hi += extra
            term.delay_op(s2, img, policy)
            s2.time_lo += term.delay_cost
            s2.time_hi += term.delay_cost
            emit(s2, "goto", target)
        return
    st.time_lo += term.cost_taken
    st.time_hi += term.cost_taken
    if kind == "call":
        st.set_reg(31, singleton(term.ret_addr))
    term.delay_op(st, img, policy)
    st.time_lo += term.delay_cost
    st.time_hi += term.delay_cost
    if kind == "jump":
        emit(st, "goto", term.taken_target)
    elif kind == "call":
        emit(st, "call", (term.callee, term.ret_addr))
    else:
        emit(st, "return", None)


class StagedInterpreter:
    """Per-block transfer tables, built once per CFG and reused by every run.

    Callee functions reached through jal are staged on demand (context
    insensitively) and cached alongside the root table.
    """

    def __init__(self, root: Cfg, model: TimingModel):
        self.model = model
        self.root = root
        self.tables: dict[int, dict[int, _StagedBlock]] = {
            root.entry: {a: _build_staged_block(b, model)
                         for a, b in root.blocks.items()}}
        self.cfgs: dict[int, Cfg] = {root.entry: root}

    def table_size(self, func: int | None = None) -> int:
        return len(self.tables[func if func is not None else self.root.entry])

    def _ensure(self, prog: LoadedProgram, func: int) -> None:
        if func in self.tables:
            return
        name = cfgmod.function_symbol_at(prog, func)
        callee_cfg = cfgmod.build_cfg(prog, name)
        self.cfgs[func] = callee_cfg
        self.tables[func] = {a: _build_staged_block(b, self.model)
                             for a, b in callee_cfg.blocks.items()}

    def transfer(self, prog: LoadedProgram, st: AbsState, img: _MemImage,
                 policy: StorePolicy, emit) -> None:
        _run_staged_block(self.tables[st.func][st.block], st, img, policy, emit)


class UnstagedInterpreter:
    """Reference route: interprets Instruction objects directly on every visit.

    No pre-compilation, no cached costs: everything is re-derived each time
    a block executes, which is exactly what staging is supposed to be
    equivalent to.
    """

    def __init__(self, root: Cfg, model: TimingModel):
        self.model = model
        self.root = root
        self.cfgs: dict[int, Cfg] = {root.entry: root}
        for block in root.blocks.values():
            for ins in block.instrs:
                if isinstance(ins, Unknown):
                    raise UnsupportedInstruction(
                        f"unknown word 0x{ins.word:08x} in block 0x{block.start:08x}")

    def _ensure(self, prog: LoadedProgram, func: int) -> None:
        if func not in self.cfgs:
            name = cfgmod.function_symbol_at(prog, func)
            self.cfgs[func] = cfgmod.build_cfg(prog, name)

    def _exec_one(self, st: AbsState, ins, img: _MemImage,
                  policy: StorePolicy) -> None:
        _interpret_instr(st, ins, img, policy)
        c = cost(self.model, ins, False)
        st.time_lo += c
        st.time_hi += c

    def transfer(self, prog: LoadedProgram, st: AbsState, img: _MemImage,
                 policy: StorePolicy, emit) -> None:
        block = self.cfgs[st.func].blocks[st.block]
        if block.terminator is ControlClass.SEQUENTIAL:
            for ins in block.instrs:
                self._exec_one(st, ins, img, policy)
            emit(st, "goto", block.succs[0])
            return
        for ins in block.instrs[:-2]:
            self._exec_one(st, ins, img, policy)
        transfer = block.instrs[-2]
        delay = block.instrs[-1]
        model = self.model
        if block.terminator is ControlClass.COND_BRANCH:
            mn = transfer.mnemonic
            sa = st.regs[transfer.rs]
            sb_iv = st.regs[transfer.rt] if mn in ("beq", "bne") else None
            taken, not_taken = refine_branch(mn, sa, sb_iv)
            fork = taken is not None and not_taken is not None
            if fork:
                st.exact = False
            for refined, taken_flag, target in (
                    (taken, True, block.succs[0]),
                    (not_taken, False, block.succs[1])):
                if refined is None:
                    continue
                s2 = st.clone() if fork and taken_flag else st
                s2.set_reg(transfer.rs, refined[0])
                if mn in ("beq", "bne"):
                    s2.set_reg(transfer.rt, refined[1])
                c = cost(model, transfer, taken_flag)
                s2.time_lo += c
                s2.time_hi += c
                _interpret_instr(s2, delay, img, policy)
                dc = cost(model, delay, False)
                s2.time_lo += dc
                s2.time_hi += dc
                emit(s2, "goto", target)
            return
        c = cost(model, transfer, True)
        st.time_lo += c
        st.time_hi += c
        if block.terminator is ControlClass.CALL:
            st.set_reg(31, singleton(block.succs[0]))
        _interpret_instr(st, delay, img, policy)
        dc = cost(model, delay, False)
        st.time_lo += dc
        st.time_hi += dc
        if block.terminator is ControlClass.UNCOND_JUMP:
            emit(st, "goto", block.succs[0])
        elif block.terminator is ControlClass.CALL:
            emit(st, "call", (block.callee, block.succs[0]))
        else:
            emit(st, "return", None)


def _interpret_instr(st: AbsState, ins, img: _MemImage,
                     policy: StorePolicy) -> None:
    """Direct (unstaged) abstract semantics of one non-control instruction."""
    if isinstance(ins, RType):
        mn, rs, rt, rd, shamt = ins
        regs = st.regs
        if mn in ("add", "addu"):
            st.set_reg(rd, iv_add(regs[rs], regs[rt]))
        elif mn in ("sub", "subu"):
            st.set_reg(rd, iv_sub(regs[rs], regs[rt]))
        elif mn == "and":
            st.set_reg(rd, iv_and(regs[rs], regs[rt]))
        elif mn == "or":
            st.set_reg(rd, iv_or(regs[rs], regs[rt]))
        elif mn == "xor":
            st.set_reg(rd, iv_xor(regs[rs], regs[rt]))
        elif mn == "nor":
            st.set_reg(rd, iv_nor(regs[rs], regs[rt]))
        elif mn == "slt":
            st.set_reg(rd, iv_slt(regs[rs], regs[rt]))
        elif mn == "sltu":
            st.set_reg(rd, iv_sltu(regs[rs], regs[rt]))
        elif mn in ("sll", "srl", "sra"):
            st.set_reg(rd, iv_shift(regs[rt], singleton(shamt), mn))
        elif mn in ("sllv", "srlv", "srav"):
            st.set_reg(rd, iv_shift(regs[rt], regs[rs], mn[:3]))
        elif mn in ("mult", "multu"):
            hi_iv, lo_iv = _mult_hilo(regs[rs], regs[rt], mn == "multu")
            st.hi = hi_iv
            st.lo = lo_iv
            if hi_iv.kind is Kind.TOP or lo_iv.kind is Kind.TOP:
                st.exact = False
        elif mn in ("div", "divu"):
            u = mn == "divu"
            q = iv_div(regs[rs], regs[rt], u)
            r = iv.div_remainder(regs[rs], regs[rt], u)
            st.lo = q
            st.hi = r
            if q.kind is Kind.TOP or r.kind is Kind.TOP:
                st.exact = False
        elif mn == "mfhi":
            st.set_reg(rd, st.hi)
        elif mn == "mflo":
            st.set_reg(rd, st.lo)
        else:
            raise UnsupportedInstruction(f"{mn} mid-block")
        return
    if isinstance(ins, IType):
        mn, rs, rt, imm = ins
        regs = st.regs
        simm = _sign16(imm)
        if mn in ("addi", "addiu"):
            st.set_reg(rt, iv_add(regs[rs], singleton(simm)))
        elif mn == "slti":
            st.set_reg(rt, iv_slt(regs[rs], singleton(simm)))
        elif mn == "sltiu":
            st.set_reg(rt, iv_sltu(regs[rs], singleton(simm, View.UNSIGNED)))
        elif mn == "andi":
            st.set_reg(rt, iv_and(regs[rs], singleton(imm, View.UNSIGNED)))
        elif mn == "ori":
            st.set_reg(rt, iv_or(regs[rs], singleton(imm, View.UNSIGNED)))
        elif mn == "xori":
            st.set_reg(rt, iv_xor(regs[rs], singleton(imm, View.UNSIGNED)))
        elif mn == "lui":
            st.set_reg(rt, singleton(imm << 16))
        elif mn == "lw":
            st.set_reg(rt, st.load_word(img, iv_add(regs[rs], singleton(simm))))
        elif mn in ("lh", "lhu", "lb", "lbu"):
            width = 16 if mn in ("lh", "lhu") else 8
            st.set_reg(rt, st.load_sub(img, iv_add(regs[rs], singleton(simm)),
                                       width, mn in ("lh", "lb")))
        elif mn == "sw":
            st.store_word(img, iv_add(regs[rs], singleton(simm)), regs[rt], policy)
        elif mn in ("sh", "sb"):
            st.store_sub(img, iv_add(regs[rs], singleton(simm)), regs[rt],
                         16 if mn == "sh" else 8, policy)
        else:
            raise UnsupportedInstruction(f"{mn} mid-block")
        return
    raise UnsupportedInstruction(f"cannot interpret {ins!r} mid-block")


# ---------------------------------------------------------------------------
# execution engine
# ---------------------------------------------------------------------------

def stage(cfg: Cfg, model: TimingModel) -> StagedInterpreter:
    return StagedInterpreter(cfg, model)


def unstaged(cfg: Cfg, model: TimingModel) -> UnstagedInterpreter:
    return UnstagedInterpreter(cfg, model)


def _init_state(interp, binding: AbstractBinding, img: _MemImage) -> AbsState:
    st = AbsState()
    st.func = interp.root.entry
    st.block = interp.root.entry
    st.regs[29] = singleton(STACK_TOP)
    st.regs[31] = singleton(EXIT_SENTINEL)
    for loc, value in binding.items:
        if isinstance(loc, Reg):
            st.regs[loc.index] = value
        else:
            st.mem[loc.addr] = value
    return st


def abs_execute(interp, prog: LoadedProgram, abstract_inputs: AbstractBinding,
                max_time: int, merge: MergePolicy = MergePolicy.NONE,
                store_policy: StorePolicy = StorePolicy.SMASH,
                call_depth_limit: int = 16,
                dump: list[str] | None = None) -> AbsResult:
    """Explore abstract states from the entry block until all paths return
    or hit the max-time budget.

    Indeterminate branches fork (clearing exactness), loops unroll, and any
    state whose lower time bound reaches ``max_time`` is cut and flips the
    status to budget-exceeded.  Under BLOCK_ENTRY merging, states meeting at
    the same block start within the same call context are joined first.

    ``dump`` collects one diagnostic line per terminal state:
    `pc_path_hash time_lo time_hi exact` (coalesced state families report
    their representative's path hash).
    """
    if max_time <= 0:
        raise ValueError("max_time must be positive")
    img = _mem_image(prog)
    init = _init_state(interp, abstract_inputs, img)

    terminal_lo: list[int] = []
    terminal_hi: list[int] = []
    terminal_exact: list[bool] = []
    cut_hi = -1
    budget_hit = False
    explored = 0

    outcomes: list[tuple[AbsState, str, object]] = []

    def emit(state, kind, arg):
        outcomes.append((state, kind, arg))

    if merge is MergePolicy.BLOCK_ENTRY:
        pending: dict = {}

        def push(state):
            key = (state.func, state.frames, state.block)
            cur = pending.get(key)
            pending[key] = state if cur is None else _join_states(cur, state, img)

        def pop():
            key = next(iter(pending))
            return pending.pop(key)

        def has_work():
            return bool(pending)
    else:
        # Path enumeration, with one semantics-preserving reduction: states
        # that are value-identical and differ only in accumulated time are
        # coalesced (their futures coincide, so the min/max aggregation is
        # unchanged).  Popping in block-address order (program order, i.e.
        # reverse postorder for structured code) makes a loop unroll fully
        # before its exit states run downstream, so the exits actually meet
        # in the pending set and coalesce; that keeps loop nests polynomial.
        heap: list = []
        buckets: dict = {}
        counter = iter(range(1 << 62))

        def push(state):
            key = (state.func, state.frames, state.block)
            bucket = buckets.setdefault(key, [])
            for s in bucket:
                if s.same_values(state):
                    if not (s.time_lo == state.time_lo
                            and s.time_hi == state.time_hi):
                        s.exact = False
                    s.time_lo = min(s.time_lo, state.time_lo)
                    s.time_hi = max(s.time_hi, state.time_hi)
                    return
            bucket.append(state)
            heapq.heappush(heap, (state.block, next(counter), state))

        def pop():
            _, _, s = heapq.heappop(heap)
            buckets[(s.func, s.frames, s.block)].remove(s)
            return s

        def has_work():
            return bool(heap)

    def route(state, kind, arg):
        nonlocal cut_hi, budget_hit
        if kind == "goto":
            state.block = arg
            state.path_hash = (state.path_hash * 1099511628211 + arg) & _U64
        elif kind == "call":
            callee, ret_block = arg
            if state.call_depth >= call_depth_limit:
                raise CallDepthExceeded(
                    f"call depth {call_depth_limit} exceeded at 0x{callee:08x}")
            interp._ensure(prog, callee)
            state.frames = state.frames + ((state.func, ret_block),)
            state.func = callee
            state.block = interp.cfgs[callee].entry
            state.path_hash = (state.path_hash * 1099511628211
                               + state.block) & _U64
        else:  # return
            expected = state.frames[-1][1] if state.frames else EXIT_SENTINEL
            ra = state.regs[31]
            if not (ra.is_singleton() and (ra.lo & _U32) == expected):
                raise ImpreciseReturn(
                    f"$ra is {ra} at a return; expected 0x{expected:08x}")
            if not state.frames:
                if dump is not None:
                    dump.append(f"{state.path_hash:016x} {state.time_lo} "
                                f"{state.time_hi} {int(state.exact)}")
                if state.time_lo >= max_time:
                    budget_hit = True
                    cut_hi = max(cut_hi, state.time_hi)
                else:
                    terminal_lo.append(state.time_lo)
                    terminal_hi.append(state.time_hi)
                    terminal_exact.append(state.exact)
                return
            caller, ret_block = state.frames[-1]
            state.frames = state.frames[:-1]
            state.func = caller
            state.block = ret_block
            state.path_hash = (state.path_hash * 1099511628211
                               + ret_block) & _U64
        if state.time_lo >= max_time:
            budget_hit = True
            cut_hi = max(cut_hi, state.time_hi)
            return
        push(state)

    push(init)
    while has_work():
        st = pop()
        explored += 1
        outcomes.clear()
        interp.transfer(prog, st, img, policy=store_policy, emit=emit)
        for state, kind, arg in list(outcomes):
            route(state, kind, arg)

    if not terminal_lo and not budget_hit:
        raise AbsintError("no feasible path reached a return")

    if budget_hit or max(terminal_hi, default=0) >= max_time:
        # some explored path reached the max-time value
        wcet_upper = max([max_time, cut_hi] + terminal_hi)
        lows = terminal_lo if terminal_lo else [min(max_time, cut_hi)]
        return AbsResult(AbsStatus.BUDGET_EXCEEDED, wcet_upper, min(lows),
                         exact=False, states_explored=explored)
    wcet_upper = max(terminal_hi)
    bcet_lower = min(terminal_lo)
    exact = (all(terminal_exact) and wcet_upper == bcet_lower
             and all(lo == hi for lo, hi in zip(terminal_lo, terminal_hi)))
    return AbsResult(AbsStatus.FINISHED, wcet_upper, bcet_lower, exact,
                     states_explored=explored)
