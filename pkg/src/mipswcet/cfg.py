"""Control-flow-graph reconstruction for one function of machine code.

Leader analysis over the function extent partitions it into basic blocks;
each control transfer keeps its delay-slot instruction inside its own block,
so only the last instruction pair of a block moves control.  Calls stay in
the graph as Call terminators (callee recorded, successor = return block);
inlining is the abstract interpreter's job.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import isa, loader
from .isa import ControlClass, Instruction, RType
from .loader import LoadedProgram


class CfgError(ValueError):
    pass


class UnsupportedIndirectJump(CfgError):
    pass


class BranchTargetOutsideFunction(CfgError):
    pass


class UnknownInstructionOnPath(CfgError):
    pass


@dataclass(frozen=True)
class BasicBlock:
    start: int
    instrs: tuple[Instruction, ...]  # delay slot attached to its terminator
    terminator: ControlClass
    succs: tuple[int, ...]           # (taken, fallthrough) for CondBranch
    is_exit: bool
    callee: int | None = None        # Call terminators only

    @property
    def end(self) -> int:
        return self.start + 4 * len(self.instrs)

    def addresses(self):
        return range(self.start, self.end, 4)


@dataclass(frozen=True)
class Cfg:
    entry: int
    blocks: dict[int, BasicBlock]
    function: str = ""

    def blocks_in_order(self) -> list[BasicBlock]:
        return [self.blocks[a] for a in sorted(self.blocks)]


def function_extent(prog: LoadedProgram, func_symbol: str) -> tuple[int, int]:
    """[start, end) of a function: symbol size if present, else delimited by
    the next function symbol, else the end of the containing section."""
    rec = prog.symbol_records.get(func_symbol)
    if rec is None:
        raise loader.UnknownSymbol(func_symbol)
    start = rec.addr
    sec = prog.section_at(start)
    if sec is None or not sec.executable:
        raise CfgError(f"symbol {func_symbol!r} is not in an executable section")
    if rec.size:
        return start, start + rec.size
    following = [r.addr for r in prog.symbol_records.values()
                 if r.is_func and not r.absolute and r.addr > start]
    end = min(following) if following else sec.end
    return start, min(end, sec.end)


def function_symbol_at(prog: LoadedProgram, addr: int) -> str:
    """Name of the function symbol defined exactly at ``addr``."""
    best = None
    for rec in prog.symbol_records.values():
        if rec.is_func and not rec.absolute and rec.addr == addr:
            if best is None or (rec.is_global and not best.is_global):
                best = rec
    if best is None:
        raise CfgError(f"no function symbol at 0x{addr:08x}")
    return best.name


def _decode_extent(prog: LoadedProgram, start: int, end: int) -> list[Instruction]:
    if start & 3 or end & 3:
        raise CfgError(f"function extent [0x{start:08x}, 0x{end:08x}) is not 4-aligned")
    return [isa.decode(loader.read_word(prog, a)) for a in range(start, end, 4)]


def build_cfg(prog: LoadedProgram, func_symbol: str) -> Cfg:
    """Reconstruct the CFG of one function.

    Rejects indirect control flow other than `jr $31` (Return), branch
    targets outside the function, unknown instructions, and unreachable
    blocks, each with a precise error.
    """
    start, end = function_extent(prog, func_symbol)
    if end <= start:
        raise CfgError(f"function {func_symbol!r} has empty extent")
    instrs = _decode_extent(prog, start, end)

    def at(addr: int) -> Instruction:
        return instrs[(addr - start) >> 2]

    # pass 1: find leaders and validate control transfers
    leaders = {start}
    transfer_at: dict[int, ControlClass] = {}
    for i, instr in enumerate(instrs):
        addr = start + 4 * i
        cls = isa.classify(instr)
        if cls is ControlClass.UNKNOWN:
            raise UnknownInstructionOnPath(
                f"unknown word 0x{instr.word:08x} at 0x{addr:08x}")
        if cls is ControlClass.SEQUENTIAL:
            continue
        if cls is ControlClass.INDIRECT_JUMP:
            raise UnsupportedIndirectJump(
                f"{isa.disassemble(instr, addr)} at 0x{addr:08x}")
        if cls is ControlClass.CALL and isinstance(instr, RType):
            raise UnsupportedIndirectJump(f"jalr at 0x{addr:08x}")
        if addr - 4 in transfer_at:
            raise CfgError(f"control transfer in the delay slot at 0x{addr:08x}")
        transfer_at[addr] = cls
        if addr + 8 > end:
            raise CfgError(f"control transfer at 0x{addr:08x} has no delay slot "
                           f"inside the function")
        if cls is ControlClass.COND_BRANCH:
            target = isa.branch_target(addr, instr.imm16)
            if not start <= target < end:
                raise BranchTargetOutsideFunction(
                    f"branch at 0x{addr:08x} targets 0x{target:08x}")
            leaders.add(target)
        elif cls is ControlClass.UNCOND_JUMP:
            target = isa.jump_target(addr, instr.target26)
            if not start <= target < end:
                raise BranchTargetOutsideFunction(
                    f"jump at 0x{addr:08x} targets 0x{target:08x}")
            leaders.add(target)
        if addr + 8 < end:
            leaders.add(addr + 8)  # fallthrough after transfer + delay slot

    for addr in sorted(leaders):
        if addr - 4 in transfer_at:
            raise CfgError(f"0x{addr:08x} is both a branch target and a delay slot")

    # pass 2: tile the extent into blocks
    blocks: dict[int, BasicBlock] = {}
    ordered = sorted(leaders)
    for idx, lead in enumerate(ordered):
        limit = ordered[idx + 1] if idx + 1 < len(ordered) else end
        body: list[Instruction] = []
        addr = lead
        block = None
        while addr < limit:
            cls = transfer_at.get(addr)
            instr = at(addr)
            body.append(instr)
            if cls is not None:
                body.append(at(addr + 4))  # delay slot
                succs: tuple[int, ...]
                callee = None
                if cls is ControlClass.COND_BRANCH:
                    succs = (isa.branch_target(addr, instr.imm16), addr + 8)
                elif cls is ControlClass.UNCOND_JUMP:
                    succs = (isa.jump_target(addr, instr.target26),)
                elif cls is ControlClass.CALL:
                    succs = (addr + 8,)
                    callee = isa.jump_target(addr, instr.target26)
                else:  # Return
                    succs = ()
                block = BasicBlock(start=lead, instrs=tuple(body),
                                   terminator=cls, succs=succs,
                                   is_exit=cls is ControlClass.RETURN,
                                   callee=callee)
                break
            addr += 4
        if block is None:
            if addr >= end:
                raise CfgError(f"function {func_symbol!r} runs off its extent "
                               f"at 0x{end:08x} without returning")
            block = BasicBlock(start=lead, instrs=tuple(body),
                               terminator=ControlClass.SEQUENTIAL,
                               succs=(limit,), is_exit=False)
        blocks[lead] = block

    for block in blocks.values():
        for succ in block.succs:
            if succ not in blocks:
                raise CfgError(f"block 0x{block.start:08x} has successor "
                               f"0x{succ:08x} that is not a block start")

    # every block must be reachable from the entry
    seen = set()
    work = [start]
    while work:
        a = work.pop()
        if a in seen:
            continue
        seen.add(a)
        work.extend(blocks[a].succs)
    unreachable = sorted(set(blocks) - seen)
    if unreachable:
        raise CfgError("unreachable code at " +
                       ", ".join(f"0x{a:08x}" for a in unreachable))

    return Cfg(entry=start, blocks=blocks, function=func_symbol)


def to_dot(cfg: Cfg) -> str:
    """GraphViz DOT rendering with deterministic (ascending address) order."""
    lines = [f'digraph "{cfg.function or "cfg"}" {{', "  node [shape=box];"]
    for block in cfg.blocks_in_order():
        label_parts = [f"0x{block.start:08x}:"]
        for addr, instr in zip(block.addresses(), block.instrs):
            label_parts.append(isa.disassemble(instr, addr))
        label = "\\l".join(label_parts) + "\\l"
        lines.append(f'  "0x{block.start:08x}" [label="{label}"];')
    for block in cfg.blocks_in_order():
        if block.terminator is ControlClass.COND_BRANCH:
            taken, fall = block.succs
            lines.append(f'  "0x{block.start:08x}" -> "0x{taken:08x}" [label="T"];')
            lines.append(f'  "0x{block.start:08x}" -> "0x{fall:08x}" [label="F"];')
        elif block.terminator is ControlClass.UNCOND_JUMP:
            lines.append(f'  "0x{block.start:08x}" -> "0x{block.succs[0]:08x}"'
                         ' [label="T"];')
        elif block.terminator is ControlClass.SEQUENTIAL:
            lines.append(f'  "0x{block.start:08x}" -> "0x{block.succs[0]:08x}"'
                         ' [label="F"];')
        else:  # a call's successor is its return block; neither taken nor fall
            for succ in block.succs:
                lines.append(f'  "0x{block.start:08x}" -> "0x{succ:08x}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
