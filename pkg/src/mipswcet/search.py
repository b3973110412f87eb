"""Divide-and-conquer search for the optimal WCET.

Best-first branch and bound over the rectangular input space: abstract
execution supplies a sound upper bound U(R) per region, concrete simulation
of region midpoints maintains a realized lower bound L, and regions with
U(R) <= L can never contain the maximum.  A region whose abstract result is
exact is accepted outright (its midpoint must reproduce U(R), or the run
aborts loudly); everything else splits along its widest dimension until the
two bounds meet.  The returned WCET is therefore equal to the true maximum
under the timing model, witnessed by an input that re-simulates to it.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass

from . import absint, cfg as cfgmod
from .absint import AbsResult, AbsStatus, AbstractBinding, MergePolicy
from .inputs import InputBinding, InputSpace
from .loader import LoadedProgram
from .sim import Machine, RunStatus
from .timing import TimingModel


class CannotSplitSingleton(ValueError):
    pass


class SearchInvariantError(AssertionError):
    """An internal soundness check failed; results must not be trusted."""


class SearchStatus(enum.Enum):
    OPTIMAL = "optimal"
    BUDGET_EXCEEDED = "budget-exceeded"
    FAULT = "fault"


@dataclass(frozen=True)
class Region:
    """Per-dimension sub-ranges of the declared input space."""

    ranges: tuple[tuple[int, int], ...]

    @property
    def cardinality(self) -> int:
        n = 1
        for lo, hi in self.ranges:
            n *= hi - lo + 1
        return n

    def midpoint(self) -> tuple[int, ...]:
        return tuple(lo + (hi - lo) // 2 for lo, hi in self.ranges)


@dataclass(frozen=True)
class SearchResult:
    status: SearchStatus
    wcet: int | None
    witness: InputBinding | None
    abs_evals: int
    concrete_evals: int
    regions_pruned: int
    max_time: int
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "status": self.status.value,
            "wcet": self.wcet,
            "witness": self.witness.to_json() if self.witness else None,
            "abs_evals": self.abs_evals,
            "concrete_evals": self.concrete_evals,
            "regions_pruned": self.regions_pruned,
            "max_time": self.max_time,
        }


def full_region(space: InputSpace) -> Region:
    return Region(tuple((d.lo, d.hi) for d in space.dims))


def split(region: Region) -> tuple[Region, Region]:
    """Split along the largest-cardinality dimension (ties: lowest index);
    with an odd number of points the lower half gets the extra one."""
    if region.cardinality < 2:
        raise CannotSplitSingleton(f"cannot split {region}")
    sizes = [hi - lo + 1 for lo, hi in region.ranges]
    dim = max(range(len(sizes)), key=lambda i: (sizes[i], -i))
    lo, hi = region.ranges[dim]
    lower_size = (sizes[dim] + 1) // 2
    mid = lo + lower_size - 1
    left = list(region.ranges)
    right = list(region.ranges)
    left[dim] = (lo, mid)
    right[dim] = (mid + 1, hi)
    return Region(tuple(left)), Region(tuple(right))


def region_binding(space: InputSpace, region: Region) -> AbstractBinding:
    items = []
    for d, (lo, hi) in zip(space.dims, region.ranges):
        rng = absint.signed(lo, hi) if d.signed else absint.unsigned(lo, hi)
        items.append((d.location, rng))
    return AbstractBinding(tuple(items))


def midpoint_binding(space: InputSpace, region: Region) -> InputBinding:
    return InputBinding(tuple(
        (d.location, m) for d, m in zip(space.dims, region.midpoint())))


def optimal_wcet(prog: LoadedProgram, model: TimingModel, entry: int,
                 space: InputSpace, max_time: int, step_budget: int,
                 merge: MergePolicy = MergePolicy.NONE) -> SearchResult:
    """Best-first branch-and-bound: sound and exact WCET w.r.t. the model.

    Any abstract evaluation that hits the max-time budget makes the verdict
    budget-exceeded with the WCET reported as max_time; a concrete fault
    (or step-budget overrun) during a midpoint evaluation reports a fault.
    """
    func_name = cfgmod.function_symbol_at(prog, entry)
    graph = cfgmod.build_cfg(prog, func_name)
    interp = absint.stage(graph, model)
    machine = Machine(prog, model)

    abs_evals = 0
    concrete_evals = 0
    regions_pruned = 0
    best: int = -1
    witness: InputBinding | None = None

    heap: list[tuple[int, int, Region, bool, InputBinding, int]] = []
    seq = 0

    class _Abort(Exception):
        def __init__(self, result):
            self.result = result

    def examine(region: Region) -> None:
        """Midpoint-simulate and abstractly bound a region, then enqueue it."""
        nonlocal abs_evals, concrete_evals, best, witness, seq
        mid = midpoint_binding(space, region)
        run = machine.run(entry, mid, step_budget)
        concrete_evals += 1
        if run.status is RunStatus.FAULT:
            raise _Abort(SearchResult(
                SearchStatus.FAULT, None, None, abs_evals, concrete_evals,
                regions_pruned, max_time, detail=str(run.fault)))
        if run.status is RunStatus.STEP_BUDGET_EXCEEDED:
            raise _Abort(SearchResult(
                SearchStatus.FAULT, None, None, abs_evals, concrete_evals,
                regions_pruned, max_time,
                detail=f"step budget exceeded at {mid}"))
        mid_time = run.total_cycles
        if mid_time > best:
            best = mid_time
            witness = mid
        result: AbsResult = absint.abs_execute(
            interp, prog, region_binding(space, region), max_time, merge)
        abs_evals += 1
        if result.status is AbsStatus.BUDGET_EXCEEDED:
            raise _Abort(SearchResult(
                SearchStatus.BUDGET_EXCEEDED, max_time, None, abs_evals,
                concrete_evals, regions_pruned, max_time,
                detail="abstract execution hit the max-time budget"))
        if result.wcet_upper < mid_time:
            raise SearchInvariantError(
                f"abstract upper bound {result.wcet_upper} below concrete "
                f"midpoint time {mid_time} on {region}")
        heapq.heappush(heap, (-result.wcet_upper, seq, region, result.exact,
                              mid, mid_time))
        seq += 1

    try:
        examine(full_region(space))
        while heap:
            neg_u, _, region, exact, mid, mid_time = heapq.heappop(heap)
            upper = -neg_u
            if upper <= best:
                regions_pruned += 1 + len(heap)  # queue is ordered: prune the rest
                heap.clear()
                break
            if exact:
                if mid_time != upper:
                    raise SearchInvariantError(
                        f"exact bound {upper} not reproduced by midpoint "
                        f"({mid_time}) on {region}")
                best = upper
                witness = mid
                continue
            if region.cardinality == 1:
                continue  # midpoint time already folded into the bound
            left, right = split(region)
            examine(left)
            examine(right)
    except _Abort as abort:
        return abort.result

    return SearchResult(SearchStatus.OPTIMAL, best, witness, abs_evals,
                        concrete_evals, regions_pruned, max_time)
