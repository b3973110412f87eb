"""WCET/BCET analysis toolchain for a MIPS32 subset.

Two complementary analyses over fully linked big-endian MIPS32 ELF
executables and a configurable per-instruction timing model:

* exhaustive fine-grained analysis: simulate every concrete input and
  report WCET/BCET between arbitrary timing points within a function;
* abstract search: branch-and-bound over the input space with interval
  abstract interpretation supplying upper bounds, returning the optimal
  (sound and exact w.r.t. the model) WCET with a concrete witness.
"""

from . import absint, cfg, exhaustive, inputs, isa, loader, search, sim, timing

__all__ = ["absint", "cfg", "exhaustive", "inputs", "isa", "loader",
           "search", "sim", "timing"]

__version__ = "0.1.0"
