"""Command-line front end.

Subcommands map onto the analyses: ``disasm``, ``cfg`` (DOT output), ``sim``
(one concrete run), ``exhaustive`` (fine-grained WCET/BCET between timing
points), and ``wcet`` (optimal WCET via abstract search).  Exit codes: 0 on
success, 1 on an analysis verdict that is not a clean result (fault, budget
exceeded), 2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import absint, cfg as cfgmod, exhaustive, isa, loader, search, sim, timing
from .inputs import Dim, InputBinding, InputSpace, location_from_str

EXIT_OK = 0
EXIT_ANALYSIS = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    pass


def _parse_int(text: str) -> int:
    return int(text, 0)


def parse_input_expr(expr: str) -> Dim:
    """`<loc>=<lo>..<hi>[:signed|:unsigned]` or `<loc>=<value>` (singleton)."""
    if "=" not in expr:
        raise ConfigError(f"bad --input {expr!r}: expected <loc>=<lo>..<hi>")
    loc_text, _, rest = expr.partition("=")
    try:
        loc = location_from_str(loc_text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad --input {expr!r}: {exc}") from None
    signed = True
    if rest.endswith(":signed"):
        rest = rest[:-len(":signed")]
    elif rest.endswith(":unsigned"):
        rest = rest[:-len(":unsigned")]
        signed = False
    try:
        if ".." in rest:
            lo_text, _, hi_text = rest.partition("..")
            lo, hi = _parse_int(lo_text), _parse_int(hi_text)
        else:
            lo = hi = _parse_int(rest)
    except ValueError:
        raise ConfigError(f"bad --input {expr!r}: values must be integers") from None
    try:
        return Dim(location=loc, lo=lo, hi=hi, signed=signed)
    except ValueError as exc:
        raise ConfigError(f"bad --input {expr!r}: {exc}") from None


def parse_tp_expr(expr: str) -> tuple[str, int]:
    if "=" not in expr:
        raise ConfigError(f"bad --tp {expr!r}: expected name=0xADDR")
    name, _, addr_text = expr.partition("=")
    try:
        return name.strip(), _parse_int(addr_text)
    except ValueError:
        raise ConfigError(f"bad --tp {expr!r}: address must be an integer") from None


def parse_query_expr(expr: str) -> tuple[str, str]:
    parts = [p.strip() for p in expr.split(",")]
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"bad --query {expr!r}: expected from,to")
    return parts[0], parts[1]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mipswcet",
        description="WCET/BCET analysis for MIPS32 executables")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, inputs=False):
        p.add_argument("elf", help="ELF32 big-endian MIPS executable")
        p.add_argument("--func", required=True, help="function symbol to analyze")
        p.add_argument("--timing", help="timing model configuration file")
        p.add_argument("--format", choices=["text", "json"], default="text")
        p.add_argument("--out", help="write output to this path instead of stdout")
        p.add_argument("--step-budget", type=_parse_int, default=1_000_000,
                       help="concrete simulator step limit per run")
        p.add_argument("--jobs", type=_parse_int, default=1,
                       help="maximum analysis workers")
        if inputs:
            p.add_argument("--input", action="append", default=[],
                           metavar="LOC=LO..HI[:signed|:unsigned]",
                           help="input dimension (repeatable)")

    p = sub.add_parser("disasm", help="disassemble one function")
    common(p)

    p = sub.add_parser("cfg", help="reconstruct and print the control flow graph")
    common(p)
    p.add_argument("--dot", help="write GraphViz DOT to this path")

    p = sub.add_parser("sim", help="simulate one concrete run")
    common(p, inputs=True)
    p.add_argument("--tp", action="append", default=[], metavar="NAME=0xADDR",
                   help="extra timing-point binding (repeatable)")
    p.add_argument("--trace", action="store_true", help="print the instruction trace")

    p = sub.add_parser("exhaustive", help="exhaustive fine-grained analysis")
    common(p, inputs=True)
    p.add_argument("--tp", action="append", default=[], metavar="NAME=0xADDR")
    p.add_argument("--query", action="append", default=[], metavar="FROM,TO",
                   help="timing-point pair to report (repeatable)")

    p = sub.add_parser("wcet", help="optimal WCET via abstract search")
    common(p, inputs=True)
    p.add_argument("--max-time", type=_parse_int, required=True,
                   help="simulated time budget (cycles)")
    p.add_argument("--merge", choices=["none", "block-entry"], default="none",
                   help="abstract state merge policy")
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _emit(config, text: str) -> None:
    if config.out:
        with open(config.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _json_dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(config):
    try:
        with open(config.elf, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {config.elf}: {exc}") from None
    prog = loader.load_image(raw)
    entry = loader.symbol_address(prog, config.func)
    model = (timing.load_timing_config(config.timing)
             if config.timing else timing.TimingModel())
    return prog, entry, model


def _tp_table(prog, config) -> dict[str, int]:
    table = {name: addr for name, addr in prog.symbols.items()
             if name.startswith("tp_")}
    for expr in getattr(config, "tp", []):
        name, addr = parse_tp_expr(expr)
        table[name] = addr
    return table


def _input_dims(config) -> list[Dim]:
    return [parse_input_expr(e) for e in config.input]


def _cmd_disasm(config) -> int:
    prog, entry, _model = _load(config)
    start, end = cfgmod.function_extent(prog, config.func)
    rows = []
    for addr in range(start, end, 4):
        word = loader.read_word(prog, addr)
        rows.append({"addr": addr, "word": word,
                     "text": isa.disassemble(isa.decode(word), addr)})
    if config.format == "json":
        _emit(config, _json_dumps({"function": config.func, "instructions": [
            {"addr": f"0x{r['addr']:08x}", "word": f"0x{r['word']:08x}",
             "text": r["text"]} for r in rows]}))
    else:
        lines = [f"0x{r['addr']:08x}: {r['word']:08x}  {r['text']}" for r in rows]
        _emit(config, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_cfg(config) -> int:
    prog, entry, _model = _load(config)
    graph = cfgmod.build_cfg(prog, config.func)
    dot = cfgmod.to_dot(graph)
    if config.dot:
        with open(config.dot, "w", encoding="utf-8") as f:
            f.write(dot)
        summary = {"function": config.func, "blocks": len(graph.blocks),
                   "dot": config.dot}
        _emit(config, _json_dumps(summary) if config.format == "json"
              else f"{len(graph.blocks)} blocks -> {config.dot}\n")
    else:
        _emit(config, dot)
    return EXIT_OK


def _singleton_binding(dims) -> InputBinding:
    for d in dims:
        if d.lo != d.hi:
            raise ConfigError(
                f"sim takes singleton inputs only; {d.location} has a range")
    return InputBinding(tuple((d.location, d.lo) for d in dims))


def _cmd_sim(config) -> int:
    prog, entry, model = _load(config)
    binding = _singleton_binding(_input_dims(config))
    tp_table = _tp_table(prog, config)
    trace: list | None = [] if config.trace else None
    result = sim.run(prog, model, entry, binding, config.step_budget,
                     tp_table, trace=trace)
    payload = {
        "status": result.status.value,
        "total_cycles": result.total_cycles,
        "tp_events": [{"tp": tp, "cycles": cyc} for tp, cyc in result.tp_events],
    }
    if result.fault is not None:
        payload["fault"] = str(result.fault)
    if config.format == "json":
        _emit(config, _json_dumps(payload))
    else:
        lines = [f"status: {result.status.value}",
                 f"total cycles: {result.total_cycles}"]
        lines += [f"tp {tp} @ {cyc}" for tp, cyc in result.tp_events]
        if result.fault is not None:
            lines.append(f"fault: {result.fault}")
        if trace is not None:
            lines += [sim.format_trace_line(*t) for t in trace]
        _emit(config, "\n".join(lines) + "\n")
    return EXIT_OK if result.status is sim.RunStatus.FINISHED else EXIT_ANALYSIS


def _cmd_exhaustive(config) -> int:
    prog, entry, model = _load(config)
    dims = _input_dims(config)
    space = InputSpace(tuple(dims))
    tp_table = _tp_table(prog, config)
    queries = [parse_query_expr(q) for q in config.query]
    report = exhaustive.analyze(prog, model, entry, space, tp_table, queries,
                                config.step_budget, function=config.func)
    if config.format == "json":
        _emit(config, _json_dumps(report.to_json()))
    else:
        lines = [f"function {config.func}: runs={report.runs}",
                 f"total wcet={report.total.wcet} (witness {report.total.wcet_witness})",
                 f"total bcet={report.total.bcet} (witness {report.total.bcet_witness})"]
        for (a, b), st in sorted(report.pairs.items()):
            lines.append(f"{a} -> {b}: wcet={st.wcet} bcet={st.bcet} "
                         f"samples={st.samples}")
        _emit(config, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_wcet(config) -> int:
    prog, entry, model = _load(config)
    dims = _input_dims(config)
    space = InputSpace(tuple(dims))
    merge = (absint.MergePolicy.BLOCK_ENTRY if config.merge == "block-entry"
             else absint.MergePolicy.NONE)
    result = search.optimal_wcet(prog, model, entry, space,
                                 max_time=config.max_time,
                                 step_budget=config.step_budget, merge=merge)
    if config.format == "json":
        _emit(config, _json_dumps(result.to_json()))
    else:
        lines = [f"status: {result.status.value}", f"wcet: {result.wcet}"]
        if result.witness is not None:
            lines.append(f"witness: {result.witness}")
        if result.detail:
            lines.append(f"detail: {result.detail}")
        lines.append(f"abs evals: {result.abs_evals}, concrete evals: "
                     f"{result.concrete_evals}, regions pruned: {result.regions_pruned}")
        _emit(config, "\n".join(lines) + "\n")
    return (EXIT_OK if result.status is search.SearchStatus.OPTIMAL
            else EXIT_ANALYSIS)


_COMMANDS = {
    "disasm": _cmd_disasm,
    "cfg": _cmd_cfg,
    "sim": _cmd_sim,
    "exhaustive": _cmd_exhaustive,
    "wcet": _cmd_wcet,
}

_USAGE_ERRORS = (ConfigError, loader.LoaderError, loader.UnknownSymbol,
                 timing.TimingConfigError, ValueError, OSError)
_ANALYSIS_ERRORS = (exhaustive.AnalysisError, cfgmod.CfgError,
                    absint.AbsintError, sim.SimFault)


def main(config) -> int:
    if config.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[config.subcommand](config)
    except _ANALYSIS_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main(parse_args(sys.argv[1:])))


if __name__ == "__main__":
    entry()
