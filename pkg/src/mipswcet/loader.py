"""ELF image loading for 32-bit big-endian MIPS executables.

Parses just the pieces the analyses need (header, section headers, symbol
table) with ``struct``; anything that is not a fully linked ELF32 big-endian
MIPS executable is rejected with a specific error.  bss-style (NOBITS)
sections are materialized as explicit zero bytes so downstream code sees a
flat initialized memory and never touches raw ELF structures.
"""

from __future__ import annotations

import struct
from bisect import bisect_right
from dataclasses import dataclass, field

ELF_MAGIC = b"\x7fELF"
EM_MIPS = 8
SHT_SYMTAB = 2
SHT_NOBITS = 8
SHF_ALLOC = 0x2
SHF_EXECINSTR = 0x4
SHN_UNDEF = 0
SHN_ABS = 0xFFF1
SHN_LORESERVE = 0xFF00
STT_FUNC = 2
STT_SECTION = 3
STT_FILE = 4
STB_GLOBAL = 1


class LoaderError(ValueError):
    pass


class BadMagic(LoaderError):
    pass


class UnsupportedClass(LoaderError):
    pass


class UnsupportedEndianness(LoaderError):
    pass


class UnsupportedMachine(LoaderError):
    pass


class MalformedHeader(LoaderError):
    pass


class UnknownSymbol(LookupError):
    pass


class UnmappedAddress(LoaderError):
    pass


class MisalignedAddress(LoaderError):
    pass


@dataclass(frozen=True)
class Section:
    name: str
    vaddr: int
    data: bytes
    executable: bool

    @property
    def end(self) -> int:
        return self.vaddr + len(self.data)

    def contains(self, addr: int) -> bool:
        return self.vaddr <= addr < self.end


@dataclass(frozen=True)
class SymbolRecord:
    name: str
    addr: int
    size: int
    is_func: bool
    absolute: bool
    is_global: bool


@dataclass(frozen=True)
class LoadedProgram:
    """Immutable parsed image: safe to share across analysis workers."""

    sections: tuple[Section, ...]          # sorted by vaddr
    symbols: dict[str, int]                # name -> virtual address
    entry_point: int
    big_endian: bool
    symbol_records: dict[str, SymbolRecord] = field(default_factory=dict)
    _starts: tuple[int, ...] = ()

    def section_at(self, addr: int) -> Section | None:
        i = bisect_right(self._starts, addr) - 1
        if i >= 0 and self.sections[i].contains(addr):
            return self.sections[i]
        return None


def _parse_sections(raw: bytes, e_shoff: int, e_shentsize: int, e_shnum: int,
                    e_shstrndx: int) -> list[dict]:
    if e_shentsize < 40:
        raise MalformedHeader(f"section header entry size {e_shentsize} too small")
    end = e_shoff + e_shentsize * e_shnum
    if e_shoff == 0 or end > len(raw):
        raise MalformedHeader("section header table out of bounds")
    headers = []
    for i in range(e_shnum):
        off = e_shoff + i * e_shentsize
        (sh_name, sh_type, sh_flags, sh_addr, sh_offset, sh_size,
         sh_link, sh_info, _align, sh_entsize) = struct.unpack_from(">10I", raw, off)
        headers.append(dict(name_off=sh_name, type=sh_type, flags=sh_flags,
                            addr=sh_addr, offset=sh_offset, size=sh_size,
                            link=sh_link, info=sh_info, entsize=sh_entsize))
    if e_shstrndx >= len(headers):
        raise MalformedHeader("section name string table index out of range")
    shstr = headers[e_shstrndx]
    if shstr["offset"] + shstr["size"] > len(raw):
        raise MalformedHeader("section name string table out of bounds")
    strtab = raw[shstr["offset"]:shstr["offset"] + shstr["size"]]
    for h in headers:
        h["name"] = _cstr(strtab, h["name_off"])
    return headers


def _cstr(table: bytes, off: int) -> str:
    if off >= len(table):
        return ""
    nul = table.find(b"\0", off)
    if nul < 0:
        nul = len(table)
    return table[off:nul].decode("utf-8", errors="replace")


def _parse_symbols(raw: bytes, headers: list[dict],
                   loaded: list[Section]) -> dict[str, SymbolRecord]:
    records: dict[str, SymbolRecord] = {}
    for h in headers:
        if h["type"] != SHT_SYMTAB:
            continue
        if h["link"] >= len(headers):
            raise MalformedHeader("symbol table string table link out of range")
        st = headers[h["link"]]
        if st["offset"] + st["size"] > len(raw):
            raise MalformedHeader("symbol string table out of bounds")
        strtab = raw[st["offset"]:st["offset"] + st["size"]]
        entsize = h["entsize"] or 16
        if h["offset"] + h["size"] > len(raw):
            raise MalformedHeader("symbol table out of bounds")
        for off in range(h["offset"], h["offset"] + h["size"], entsize):
            st_name, st_value, st_size, st_info, _other, st_shndx = \
                struct.unpack_from(">IIIBBH", raw, off)
            name = _cstr(strtab, st_name)
            st_type = st_info & 0xF
            if not name or st_type in (STT_SECTION, STT_FILE):
                continue
            if st_shndx == SHN_UNDEF:
                continue
            absolute = st_shndx == SHN_ABS
            if st_shndx >= SHN_LORESERVE and not absolute:
                continue
            if not absolute:
                sec = next((s for s in loaded
                            if s.vaddr <= st_value <= s.end), None)
                if sec is None:
                    # symbol points into a section we did not load (debug etc.)
                    continue
            rec = SymbolRecord(name=name, addr=st_value, size=st_size,
                               is_func=st_type == STT_FUNC, absolute=absolute,
                               is_global=(st_info >> 4) == STB_GLOBAL)
            prev = records.get(name)
            if prev is None or (rec.is_global and not prev.is_global):
                records[name] = rec
    return records


def load_image(raw: bytes) -> LoadedProgram:
    """Parse a complete ELF file image into a LoadedProgram.

    Rejects anything that is not a 32-bit big-endian MIPS ELF; all
    allocatable sections are loaded (NOBITS expanded to zeros) and the full
    symbol table is kept.
    """
    if len(raw) < 4 or raw[:4] != ELF_MAGIC:
        raise BadMagic("not an ELF file")
    if len(raw) < 52:
        raise MalformedHeader("file too short for an ELF32 header")
    if raw[4] != 1:
        raise UnsupportedClass("only ELF32 is supported")
    if raw[5] != 2:
        raise UnsupportedEndianness("only big-endian MIPS is supported")
    (_e_type, e_machine, _e_version, e_entry, _e_phoff, e_shoff, _e_flags,
     _e_ehsize, _e_phentsize, _e_phnum, e_shentsize, e_shnum, e_shstrndx) = \
        struct.unpack_from(">HHIIIIIHHHHHH", raw, 16)
    if e_machine != EM_MIPS:
        raise UnsupportedMachine(f"e_machine {e_machine}, expected MIPS ({EM_MIPS})")

    headers = _parse_sections(raw, e_shoff, e_shentsize, e_shnum, e_shstrndx)

    loaded: list[Section] = []
    for h in headers:
        if not h["flags"] & SHF_ALLOC or h["size"] == 0:
            continue
        if h["addr"] + h["size"] > 0x1_0000_0000:
            raise MalformedHeader(f"section {h['name']} overflows the 32-bit address space")
        if h["type"] == SHT_NOBITS:
            data = bytes(h["size"])
        else:
            if h["offset"] + h["size"] > len(raw):
                raise MalformedHeader(f"section {h['name']} data out of bounds")
            data = raw[h["offset"]:h["offset"] + h["size"]]
        loaded.append(Section(name=h["name"], vaddr=h["addr"], data=data,
                              executable=bool(h["flags"] & SHF_EXECINSTR)))

    loaded.sort(key=lambda s: s.vaddr)
    for a, b in zip(loaded, loaded[1:]):
        if a.end > b.vaddr:
            raise MalformedHeader(f"sections {a.name} and {b.name} overlap")

    records = _parse_symbols(raw, headers, loaded)
    return LoadedProgram(
        sections=tuple(loaded),
        symbols={name: r.addr for name, r in records.items()},
        entry_point=e_entry,
        big_endian=True,
        symbol_records=records,
        _starts=tuple(s.vaddr for s in loaded),
    )


def load_file(path) -> LoadedProgram:
    with open(path, "rb") as f:
        return load_image(f.read())


def symbol_address(prog: LoadedProgram, name: str) -> int:
    try:
        return prog.symbols[name]
    except KeyError:
        raise UnknownSymbol(name) from None


def read_word(prog: LoadedProgram, addr: int) -> int:
    """Big-endian 32-bit word at a 4-aligned address inside some section."""
    if addr & 3:
        raise MisalignedAddress(f"0x{addr:08x} is not 4-aligned")
    sec = prog.section_at(addr)
    if sec is None or addr + 4 > sec.end:
        raise UnmappedAddress(f"0x{addr:08x} is not inside any loaded section")
    off = addr - sec.vaddr
    return int.from_bytes(sec.data[off:off + 4], "big")
