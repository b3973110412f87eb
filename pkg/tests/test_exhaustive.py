import json

import pytest

from mipswcet.exhaustive import (BudgetExceeded, FaultyInput, NoObservation,
                                 UnknownTimingPoint, analyze, enumerate_space,
                                 pair_deltas)
from mipswcet.inputs import Dim, InputBinding, InputSpace, Reg
from mipswcet.sim import Machine
from mipswcet.timing import TimingModel

DEFAULT = TimingModel()


def space_of(*dims):
    return InputSpace(tuple(dims))


def test_enumerate_single_dim():
    space = space_of(Dim(Reg(4), 0, 2))
    values = [b.value_of(Reg(4)) for b in enumerate_space(space)]
    assert values == [0, 1, 2]


def test_enumerate_row_major():
    space = space_of(Dim(Reg(4), 0, 1), Dim(Reg(5), 0, 1))
    got = [(b.value_of(Reg(4)), b.value_of(Reg(5)))
           for b in enumerate_space(space)]
    assert got == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumerate_empty_dims():
    assert list(enumerate_space(space_of())) == [InputBinding(())]


def test_enumerate_count_matches_cardinality():
    space = space_of(Dim(Reg(4), -3, 3), Dim(Reg(5), 10, 14))
    assert space.cardinality == 7 * 5
    assert sum(1 for _ in enumerate_space(space)) == 35


def test_signed_range_validation():
    with pytest.raises(ValueError):
        Dim(Reg(4), 5, 1)
    with pytest.raises(ValueError):
        Dim(Reg(4), -1, 3, signed=False)
    with pytest.raises(ValueError):
        space_of(Dim(Reg(4), 0, 1), Dim(Reg(4), 0, 1))  # duplicate location


def test_absval_whole_function_bounds(absminmax):
    """Oracle: the five individual sim runs, compared independently."""
    entry = absminmax.symbols["abs_val"]
    space = space_of(Dim(Reg(4), -2, 2))
    report = analyze(absminmax, DEFAULT, entry, space, {}, [], 10_000,
                     function="abs_val")
    machine = Machine(absminmax, DEFAULT)
    times = {}
    for n in (-2, -1, 0, 1, 2):
        times[n] = machine.run(entry, InputBinding(((Reg(4), n),)),
                               10_000).total_cycles
    assert report.total.wcet == max(times.values())
    assert report.total.bcet == min(times.values())
    assert report.runs == 5
    # witnesses re-simulate to exactly the reported values
    w = machine.run(entry, report.total.wcet_witness, 10_000).total_cycles
    b = machine.run(entry, report.total.bcet_witness, 10_000).total_cycles
    assert (w, b) == (report.total.wcet, report.total.bcet)


def test_two_point_pair(twopoints):
    entry = twopoints.symbols["tpfix"]
    tp = {"tp_a": twopoints.symbols["tp_a"], "tp_b": twopoints.symbols["tp_b"]}
    space = space_of(Dim(Reg(4), 0, 15))
    report = analyze(twopoints, DEFAULT, entry, space, tp,
                     [("tp_a", "tp_b")], 10_000, function="tpfix")
    stats = report.pairs[("tp_a", "tp_b")]
    # independent harness: recompute deltas from raw tp_events per run
    machine = Machine(twopoints, DEFAULT)
    deltas = []
    for n in range(16):
        res = machine.run(entry, InputBinding(((Reg(4), n),)), 10_000, tp)
        events = dict(res.tp_events)
        deltas.append(events["tp_b"] - events["tp_a"])
    assert stats.wcet == max(deltas)
    assert stats.bcet == min(deltas)
    assert stats.samples == 16
    assert stats.bcet <= stats.wcet


def test_constant_delta_pair(twopoints):
    entry = twopoints.symbols["tpfix"]
    tp = {"tp_a": twopoints.symbols["tp_a"], "tp_b": twopoints.symbols["tp_b"]}
    space = space_of(Dim(Reg(4), 3, 3))
    report = analyze(twopoints, DEFAULT, entry, space, tp,
                     [("tp_a", "tp_b")], 10_000)
    stats = report.pairs[("tp_a", "tp_b")]
    assert stats.wcet == stats.bcet


def test_unknown_timing_point(twopoints):
    entry = twopoints.symbols["tpfix"]
    with pytest.raises(UnknownTimingPoint):
        analyze(twopoints, DEFAULT, entry, space_of(), {"tp_a": 0},
                [("tp_a", "tp_nope")], 100)


def test_no_observation(twopoints):
    entry = twopoints.symbols["tpfix"]
    tp = {"tp_a": twopoints.symbols["tp_a"], "tp_b": twopoints.symbols["tp_b"]}
    with pytest.raises(NoObservation):
        # tp_a never occurs after tp_b
        analyze(twopoints, DEFAULT, entry, space_of(Dim(Reg(4), 0, 1)), tp,
                [("tp_b", "tp_a")], 10_000)


def test_faulty_input_aborts(mayfault):
    entry = mayfault.symbols["mayfault"]
    space = space_of(Dim(Reg(4), 0x7FFFFFFE, 0x7FFFFFFF),
                     Dim(Reg(5), 1, 1))
    with pytest.raises(FaultyInput) as exc:
        analyze(mayfault, DEFAULT, entry, space, {}, [], 100)
    assert exc.value.binding.value_of(Reg(4)) == 0x7FFFFFFF


def test_budget_exceeded_aborts(countdown):
    entry = countdown.symbols["countdown"]
    with pytest.raises(BudgetExceeded):
        analyze(countdown, DEFAULT, entry, space_of(Dim(Reg(4), 50, 60)),
                {}, [], 20)


def test_pair_deltas_multi_occurrence():
    events = [("a", 1), ("a", 5), ("b", 9), ("a", 12), ("b", 20)]
    # each `a` pairs with the next subsequent `b`
    assert pair_deltas(events, ("a", "b")) == [8, 4, 8]
    assert pair_deltas(events, ("b", "a")) == [3]


def test_report_json_schema(twopoints):
    entry = twopoints.symbols["tpfix"]
    tp = {"tp_a": twopoints.symbols["tp_a"], "tp_b": twopoints.symbols["tp_b"]}
    report = analyze(twopoints, DEFAULT, entry,
                     space_of(Dim(Reg(4), 0, 3)), tp, [("tp_a", "tp_b")],
                     10_000, function="tpfix")
    blob = json.dumps(report.to_json())
    parsed = json.loads(blob)
    assert parsed["function"] == "tpfix"
    assert parsed["pairs"][0]["from"] == "tp_a"
    assert set(parsed["total"]) == {"wcet", "bcet", "witnesses"}
    assert parsed["pairs"][0]["wcet"] >= parsed["pairs"][0]["bcet"]
