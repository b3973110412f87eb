"""Input locations, concrete bindings, and rectangular input spaces.

A Location is an argument register a0-a3 or a 4-aligned memory word; an
InputSpace is an ordered list of per-location ranges whose cross product is
the concrete input space of an analysis run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

ARG_REGS = (4, 5, 6, 7)  # a0-a3
_REG_NAMES = {4: "a0", 5: "a1", 6: "a2", 7: "a3"}
_U32 = 0xFFFFFFFF


@dataclass(frozen=True, order=True)
class Reg:
    index: int

    def __post_init__(self):
        if self.index not in ARG_REGS:
            raise ValueError(f"input registers are a0-a3 (4-7), got {self.index}")

    def __str__(self) -> str:
        return _REG_NAMES[self.index]


@dataclass(frozen=True, order=True)
class Mem:
    addr: int
    width: int = 32

    def __post_init__(self):
        if self.addr & 3:
            raise ValueError(f"memory input address 0x{self.addr:08x} is not 4-aligned")
        if self.width != 32:
            raise ValueError("only 32-bit memory inputs are supported")

    def __str__(self) -> str:
        return f"mem:0x{self.addr:08x}"


Location = Union[Reg, Mem]


def location_from_str(text: str) -> Location:
    if text.startswith("mem:"):
        return Mem(int(text[4:], 16))
    for idx, name in _REG_NAMES.items():
        if text == name:
            return Reg(idx)
    raise ValueError(f"unknown input location {text!r} (use a0-a3 or mem:0xADDR)")


@dataclass(frozen=True)
class Dim:
    """One input dimension: a Location ranging over [lo, hi].

    Bounds are interpreted under the declared signedness; lo <= hi.
    """

    location: Location
    lo: int
    hi: int
    signed: bool = True

    def __post_init__(self):
        lo_min, hi_max = (-(1 << 31), (1 << 31) - 1) if self.signed else (0, _U32)
        if not (lo_min <= self.lo <= self.hi <= hi_max):
            view = "signed" if self.signed else "unsigned"
            raise ValueError(
                f"bad {view} range [{self.lo}, {self.hi}] for {self.location}")

    @property
    def cardinality(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class InputSpace:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        locs = [d.location for d in self.dims]
        if len(set(locs)) != len(locs):
            raise ValueError("input dimensions must name distinct locations")
        if self.cardinality >= 1 << 64:
            raise ValueError("input space cardinality does not fit in 64 bits")

    @property
    def cardinality(self) -> int:
        n = 1
        for d in self.dims:
            n *= d.cardinality
        return n


@dataclass(frozen=True)
class InputBinding:
    """Concrete values for a set of locations, in dimension order.

    Values are kept as written (signed dimensions keep negative numbers);
    ``materialize`` yields the 32-bit patterns the simulator applies.
    """

    items: tuple[tuple[Location, int], ...]

    def materialize(self) -> Iterator[tuple[Location, int]]:
        for loc, value in self.items:
            yield loc, value & _U32

    def value_of(self, loc: Location) -> int:
        for item_loc, value in self.items:
            if item_loc == loc:
                return value
        raise KeyError(loc)

    def to_json(self) -> dict[str, int]:
        return {str(loc): value for loc, value in self.items}

    def __str__(self) -> str:
        return ", ".join(f"{loc}={value}" for loc, value in self.items) or "(empty)"


EMPTY_BINDING = InputBinding(())
