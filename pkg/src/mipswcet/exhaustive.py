"""Exhaustive fine-grained timing analysis.

Enumerates the entire concrete input space, simulates every point, and
reports WCET/BCET between requested timing-point pairs plus whole-function
bounds, each with a witness binding that reproduces the reported cycle count
exactly.  Deliberately non-scalable: the point is ground truth, not speed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .inputs import InputBinding, InputSpace
from .loader import LoadedProgram
from .sim import Machine, RunStatus, SimFault
from .timing import TimingModel


class AnalysisError(Exception):
    pass


class FaultyInput(AnalysisError):
    def __init__(self, binding: InputBinding, fault: SimFault):
        super().__init__(f"input {binding} faulted: {fault}")
        self.binding = binding
        self.fault = fault


class BudgetExceeded(AnalysisError):
    def __init__(self, binding: InputBinding):
        super().__init__(f"input {binding} exceeded the step budget")
        self.binding = binding


class NoObservation(AnalysisError):
    def __init__(self, query: tuple[str, str]):
        super().__init__(f"timing-point pair {query[0]} -> {query[1]} "
                         f"never observed on any input")
        self.query = query


class UnknownTimingPoint(AnalysisError):
    pass


def enumerate_space(space: InputSpace) -> Iterator[InputBinding]:
    """Yield every point of the cross product exactly once, row-major over dims.

    The last dimension varies fastest; an empty dims list yields exactly one
    empty binding.
    """
    dims = space.dims
    if not dims:
        yield InputBinding(())
        return
    values = [d.lo for d in dims]
    locs = [d.location for d in dims]
    last = len(dims) - 1
    while True:
        yield InputBinding(tuple(zip(locs, values)))
        i = last
        while i >= 0:
            if values[i] < dims[i].hi:
                values[i] += 1
                break
            values[i] = dims[i].lo
            i -= 1
        else:
            return


@dataclass
class PairStats:
    wcet: int = -1
    bcet: int = -1
    wcet_witness: InputBinding | None = None
    bcet_witness: InputBinding | None = None
    samples: int = 0

    def record(self, delta: int, binding: InputBinding) -> None:
        self.samples += 1
        if self.wcet_witness is None or delta > self.wcet:
            self.wcet = delta
            self.wcet_witness = binding
        if self.bcet_witness is None or delta < self.bcet:
            self.bcet = delta
            self.bcet_witness = binding


@dataclass
class FineGrainedReport:
    function: str
    space: InputSpace
    pairs: dict[tuple[str, str], PairStats]
    total: PairStats
    runs: int = 0

    def to_json(self) -> dict:
        return {
            "function": self.function,
            "space": [{"location": str(d.location), "lo": d.lo, "hi": d.hi,
                       "signed": d.signed} for d in self.space.dims],
            "pairs": [
                {"from": a, "to": b, "wcet": st.wcet, "bcet": st.bcet,
                 "wcet_witness": st.wcet_witness.to_json(),
                 "bcet_witness": st.bcet_witness.to_json(),
                 "samples": st.samples}
                for (a, b), st in sorted(self.pairs.items())
            ],
            "total": {
                "wcet": self.total.wcet,
                "bcet": self.total.bcet,
                "witnesses": {"wcet": self.total.wcet_witness.to_json(),
                              "bcet": self.total.bcet_witness.to_json()},
            },
            "runs": self.runs,
        }


def pair_deltas(tp_events, query: tuple[str, str]) -> list[int]:
    """Each occurrence of `a` paired with the next subsequent occurrence of `b`."""
    a, b = query
    deltas = []
    for i, (tp, cyc_a) in enumerate(tp_events):
        if tp != a:
            continue
        for tp2, cyc_b in tp_events[i + 1:]:
            if tp2 == b:
                deltas.append(cyc_b - cyc_a)
                break
    return deltas


def analyze(prog: LoadedProgram, model: TimingModel, entry: int,
            space: InputSpace, tp_table: dict[str, int],
            queries: list[tuple[str, str]], step_budget: int,
            function: str = "") -> FineGrainedReport:
    """Simulate every input point and aggregate min/max deltas per query pair.

    A faulting or budget-exceeding input aborts the whole analysis: skipping
    it would silently shrink the input space.
    """
    for a, b in queries:
        for tp in (a, b):
            if tp not in tp_table:
                raise UnknownTimingPoint(f"{tp!r} is not in the timing-point table")
    machine = Machine(prog, model)
    pairs = {q: PairStats() for q in queries}
    total = PairStats()
    runs = 0
    for binding in enumerate_space(space):
        result = machine.run(entry, binding, step_budget, tp_table)
        if result.status is RunStatus.FAULT:
            raise FaultyInput(binding, result.fault)
        if result.status is RunStatus.STEP_BUDGET_EXCEEDED:
            raise BudgetExceeded(binding)
        runs += 1
        total.record(result.total_cycles, binding)
        for query, stats in pairs.items():
            for delta in pair_deltas(result.tp_events, query):
                stats.record(delta, binding)
    for query, stats in pairs.items():
        if stats.samples == 0:
            raise NoObservation(query)
    return FineGrainedReport(function=function, space=space, pairs=pairs,
                             total=total, runs=runs)
