#!/usr/bin/env python3
"""Rebuild the prebuilt ELF fixtures under tests/fixtures/.

Requires a MIPS-capable clang and ld.lld (any LLVM >= 10 built with the MIPS
backend works; Ubuntu's stock clang qualifies).  Tests never invoke this:
they consume the committed ELFs.  Usage:

    python3 scripts/build_fixtures.py [--clang clang] [--lld ld.lld]
"""

from __future__ import annotations

import argparse
import json
import shutil
import struct
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
SRC = ROOT / "tests" / "fixtures" / "src"
OUT = ROOT / "tests" / "fixtures"
TEXT_BASE = 0x400000

FIXTURES = [
    # (source, entry symbol)
    ("countdown.s", "countdown"),
    ("absminmax.s", "abs_val"),
    ("classify4.s", "classify4"),
    ("nested.s", "nested"),
    ("sort4.s", "sort4"),
    ("clamp.s", "clamp"),
    ("twopoints.s", "tpfix"),
    ("muldiv.s", "muldiv"),
    ("badjumps.s", "straight"),
    ("withdata.s", "readglobal"),
    ("mayfault.s", "mayfault"),
    ("calls3.c", "main"),
]


def run(cmd: list[str]) -> None:
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"command failed: {' '.join(cmd)}\n{proc.stderr}")


def build_one(clang: str, lld: str, source: Path, entry: str, out: Path) -> None:
    obj = out.with_suffix(".o")
    flags = ["--target=mips-unknown-linux-gnu", "-fno-pic", "-mno-abicalls"]
    if source.suffix == ".c":
        flags += ["-O1", "-nostdlib"]
    run([clang, *flags, "-c", str(source), "-o", str(obj)])
    run([lld, str(obj), "-o", str(out), "-e", entry, f"-Ttext={TEXT_BASE:#x}"])
    obj.unlink()


# ---------------------------------------------------------------------------
# directed instruction corpus: gas text assembled by the reference toolchain,
# expected disassembly computed here from the layout (never from the package)
# ---------------------------------------------------------------------------

def corpus_entries():
    """(asm_line, expected) pairs; `@N` in expected is replaced by the
    absolute address of the instruction N slots from the corpus start."""
    return [
        ("nop", "nop"),
        ("add $16, $17, $18", "add $16, $17, $18"),
        ("addu $2, $0, $4", "addu $2, $0, $4"),
        ("sub $31, $30, $29", "sub $31, $30, $29"),
        ("subu $1, $2, $3", "subu $1, $2, $3"),
        ("and $9, $10, $11", "and $9, $10, $11"),
        ("or $9, $10, $11", "or $9, $10, $11"),
        ("xor $9, $10, $11", "xor $9, $10, $11"),
        ("nor $9, $10, $11", "nor $9, $10, $11"),
        ("slt $12, $13, $14", "slt $12, $13, $14"),
        ("sltu $12, $13, $14", "sltu $12, $13, $14"),
        ("sll $9, $10, 1", "sll $9, $10, 1"),
        ("sll $9, $10, 31", "sll $9, $10, 31"),
        ("srl $9, $10, 7", "srl $9, $10, 7"),
        ("sra $9, $10, 16", "sra $9, $10, 16"),
        ("sllv $9, $10, $11", "sllv $9, $10, $11"),
        ("srlv $9, $10, $11", "srlv $9, $10, $11"),
        ("srav $9, $10, $11", "srav $9, $10, $11"),
        ("mult $12, $13", "mult $12, $13"),
        ("multu $12, $13", "multu $12, $13"),
        ("div $zero, $8, $9", "div $8, $9"),
        ("divu $zero, $10, $11", "divu $10, $11"),
        ("mfhi $14", "mfhi $14"),
        ("mflo $15", "mflo $15"),
        ("addi $8, $9, -100", "addi $8, $9, -100"),
        ("addiu $4, $4, -1", "addiu $4, $4, -1"),
        ("addiu $29, $29, 32", "addiu $29, $29, 32"),
        ("slti $8, $9, 16384", "slti $8, $9, 16384"),
        ("sltiu $8, $9, -5", "sltiu $8, $9, -5"),
        ("andi $8, $9, 0xffff", "andi $8, $9, 0xffff"),
        ("ori $8, $9, 0xbeef", "ori $8, $9, 0xbeef"),
        ("xori $8, $9, 0x1", "xori $8, $9, 0x1"),
        ("lui $8, 0x1234", "lui $8, 0x1234"),
        ("lui $8, 0xffff", "lui $8, 0xffff"),
        ("lw $31, 16($29)", "lw $31, 16($29)"),
        ("lh $7, -2($20)", "lh $7, -2($20)"),
        ("lhu $7, 6($20)", "lhu $7, 6($20)"),
        ("lb $7, -3($20)", "lb $7, -3($20)"),
        ("lbu $7, 0($20)", "lbu $7, 0($20)"),
        ("sw $31, 20($29)", "sw $31, 20($29)"),
        ("sh $7, 2($20)", "sh $7, 2($20)"),
        ("sb $7, 1($20)", "sb $7, 1($20)"),
        ("corpus_mid:", None),
        ("beq $4, $0, corpus_mid", "beq $4, $0, @corpus_mid"),
        ("nop", "nop"),
        ("bne $4, $5, corpus_mid", "bne $4, $5, @corpus_mid"),
        ("nop", "nop"),
        ("blez $6, corpus_end", "blez $6, @corpus_end"),
        ("nop", "nop"),
        ("bgtz $6, corpus_end", "bgtz $6, @corpus_end"),
        ("nop", "nop"),
        ("bltz $7, corpus_mid", "bltz $7, @corpus_mid"),
        ("nop", "nop"),
        ("bgez $7, corpus_end", "bgez $7, @corpus_end"),
        ("nop", "nop"),
        ("j corpus_end", "j @corpus_end"),
        ("nop", "nop"),
        ("jal corpus_mid", "jal @corpus_mid"),
        ("nop", "nop"),
        ("jalr $8", "jalr $8"),
        ("nop", "nop"),
        ("jalr $9, $8", "jalr $9, $8"),
        ("nop", "nop"),
        ("jr $8", "jr $8"),
        ("nop", "nop"),
        ("corpus_end:", None),
        ("jr $31", "jr $31"),
        ("nop", "nop"),
    ]


def build_corpus(clang: str, lld: str) -> None:
    entries = corpus_entries()
    lines = ["\t.text", "\t.set noreorder", "\t.set nomacro",
             "\t.globl corpus", "corpus:"]
    labels: dict[str, int] = {}
    addr = TEXT_BASE
    placed: list[tuple[int, str]] = []
    for asm, expected in entries:
        if expected is None:  # label definition
            labels[asm.rstrip(":")] = addr
            lines.append(asm)
            continue
        lines.append("\t" + asm)
        placed.append((addr, expected))
        addr += 4
    src = SRC / "corpus.s"
    src.write_text("\n".join(lines) + "\n", encoding="utf-8")
    build_one(clang, lld, src, "corpus", OUT / "corpus.elf")
    resolved = []
    for addr, expected in placed:
        for name, laddr in labels.items():
            expected = expected.replace(f"@{name}", f"0x{laddr:x}")
        resolved.append({"addr": addr, "text": expected})
    (OUT / "corpus.json").write_text(
        json.dumps(resolved, indent=1) + "\n", encoding="utf-8")


def sanity_check() -> None:
    """Every fixture must be ELF32 BE MIPS; benchmark .text must decode."""
    sys.path.insert(0, str(ROOT / "src"))
    from mipswcet import isa, loader

    for elf in sorted(OUT.glob("*.elf")):
        prog = loader.load_image(elf.read_bytes())
        assert prog.big_endian
        for sec in prog.sections:
            if not sec.executable:
                continue
            words = [struct.unpack_from(">I", sec.data, off)[0]
                     for off in range(0, len(sec.data) - 3, 4)]
            unknown = [w for w in words
                       if isinstance(isa.decode(w), isa.Unknown)]
            if unknown:
                sys.exit(f"{elf.name}: {len(unknown)} undecodable words, "
                         f"first 0x{unknown[0]:08x}")
        print(f"  {elf.name}: ok ({len(prog.symbols)} symbols)")


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--clang", default="clang")
    parser.add_argument("--lld", default=None)
    args = parser.parse_args()
    clang = args.clang
    lld = args.lld or shutil.which("ld.lld") or "/usr/lib/llvm-14/bin/ld.lld"
    OUT.mkdir(parents=True, exist_ok=True)
    SRC.mkdir(parents=True, exist_ok=True)
    for source, entry in FIXTURES:
        path = SRC / source
        out = OUT / (path.stem + ".elf")
        build_one(clang, lld, path, entry, out)
        print(f"built {out.name}")
    build_corpus(clang, lld)
    print("built corpus.elf + corpus.json")
    sanity_check()


if __name__ == "__main__":
    main()
