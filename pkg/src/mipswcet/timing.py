"""Configurable per-instruction timing model.

All WCET/BCET numbers this package reports are defined relative to one of
these models: costs are deterministic functions of (instruction, taken-flag)
with no history dependence (no cache, no pipeline state).  Defaults are one
cycle per instruction with all extras zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .isa import Instruction, Unknown

_CONTROL = frozenset(isa.COND_BRANCHES | {"j", "jal", "jr", "jalr"})


class TimingConfigError(ValueError):
    pass


class UnknownKey(TimingConfigError):
    pass


class NonPositiveCost(TimingConfigError):
    pass


class TimingSyntaxError(TimingConfigError):
    def __init__(self, line: int, col: int, msg: str):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


class UnsupportedInstruction(ValueError):
    pass


@dataclass(frozen=True)
class TimingModel:
    base_cost: dict[str, int] = field(default_factory=dict)  # mnemonic -> cycles
    branch_taken_extra: int = 0
    memory_access_extra: int = 0
    muldiv_cost: int = 0

    def base(self, mnemonic: str) -> int:
        return self.base_cost.get(mnemonic, 1)


DEFAULT_MODEL = TimingModel()


def cost(model: TimingModel, instr: Instruction, taken: bool) -> int:
    """Cycles for one dynamic instance of ``instr``.

    ``taken`` only matters for control transfers; unconditional jumps, calls
    and returns always transfer, so callers pass taken=True for them.
    """
    if isinstance(instr, Unknown):
        raise UnsupportedInstruction(f"0x{instr.word:08x}")
    mn = instr.mnemonic
    c = model.base_cost.get(mn, 1)
    if taken and mn in _CONTROL:
        c += model.branch_taken_extra
    if mn in isa.MEMORY:
        c += model.memory_access_extra
    if mn in isa.MULDIV:
        c += model.muldiv_cost
    return c


_EXTRA_KEYS = ("branch_taken_extra", "memory_access_extra", "muldiv_cost")


def parse_timing_config(text: str) -> TimingModel:
    """Parse the line-oriented `key = integer` format.

    Keys are ``cost.<mnemonic>`` for base costs (must be >= 1) and the three
    extras (must be >= 0); `#` starts a comment; unspecified keys keep their
    defaults.
    """
    base: dict[str, int] = {}
    extras = {k: 0 for k in _EXTRA_KEYS}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise TimingSyntaxError(lineno, col, "expected `key = integer`")
        key_part, _, value_part = line.partition("=")
        key = key_part.strip()
        value_str = value_part.strip()
        if not key:
            raise TimingSyntaxError(lineno, 1, "missing key before `=`")
        try:
            value = int(value_str, 0)
        except ValueError:
            col = line.index("=") + 2
            raise TimingSyntaxError(lineno, col,
                                    f"expected an integer, got {value_str!r}") from None
        if key.startswith("cost."):
            mnemonic = key[5:]
            if mnemonic not in isa.SUPPORTED_MNEMONICS:
                raise UnknownKey(f"line {lineno}: unsupported mnemonic {mnemonic!r}")
            if value < 1:
                raise NonPositiveCost(f"line {lineno}: cost.{mnemonic} must be >= 1")
            base[mnemonic] = value
        elif key in extras:
            if value < 0:
                raise NonPositiveCost(f"line {lineno}: {key} must be >= 0")
            extras[key] = value
        else:
            raise UnknownKey(f"line {lineno}: unknown key {key!r}")
    return TimingModel(base_cost=base, **extras)


def load_timing_config(path) -> TimingModel:
    with open(path, "r", encoding="utf-8") as f:
        return parse_timing_config(f.read())
