import pytest

from rvc.formula import parse
from rvc.oracle import MissingAtomError, oracle_eval
from rvc.trace import Record, Trace


def values(f_text, records):
    return [v.value for v in oracle_eval(parse(f_text), Trace(records))]


def test_once_bounded_window_expires():
    records = [Record(t, {"p": t == 0}) for t in range(4)]
    assert values("once[0:2] p", records) == [True, True, True, False]


def test_since_unbounded():
    records = [
        Record(0, {"p": False, "q": True}),
        Record(1, {"p": True, "q": False}),
        Record(2, {"p": True, "q": False}),
        Record(3, {"p": False, "q": False}),
    ]
    assert values("p since q", records) == [True, True, True, False]


def test_pre_is_false_at_first_record():
    records = [Record(t, {"p": v}) for t, v in enumerate([True, False, True])]
    assert values("pre p", records) == [False, True, False]


def test_since_lower_bound_excludes_recent_match():
    # q at time 0 only satisfies since[2:*] once two time units have passed
    records = [
        Record(0, {"p": True, "q": True}),
        Record(1, {"p": True, "q": False}),
        Record(2, {"p": True, "q": False}),
        Record(3, {"p": False, "q": False}),
    ]
    assert values("p since[2:*] q", records) == [False, False, True, False]


def test_since_needs_left_operand_throughout():
    records = [
        Record(0, {"p": False, "q": True}),
        Record(1, {"p": False, "q": False}),
        Record(2, {"p": True, "q": False}),
    ]
    assert values("p since q", records) == [True, False, False]


def test_historically_is_not_once_not():
    records = [Record(t, {"p": t != 2}) for t in range(5)]
    hist = values("historically[0:1] p", records)
    dual = values("!(once[0:1] !p)", records)
    assert hist == dual == [True, True, False, False, True]


def test_time_gaps_drive_metric_bounds():
    records = [
        Record(0, {"p": True}),
        Record(10, {"p": False}),
        Record(11, {"p": False}),
    ]
    # window [0:5] at time 10 excludes time 0
    assert values("once[0:5] p", records) == [True, False, False]
    # window [0:10] at time 10 still sees it
    assert values("once[0:10] p", records) == [True, True, False]


def test_missing_atom_names_record_and_atom():
    records = [Record(0, {"p": True}), Record(1, {"q": True})]
    with pytest.raises(MissingAtomError, match="record 1 is missing atom 'p'"):
        oracle_eval(parse("p"), records)


def test_empty_trace():
    assert oracle_eval(parse("p since q"), Trace([])) == []


def test_verdict_times_copy_record_times():
    records = [Record(3, {"p": True}), Record(9, {"p": True})]
    assert [v.time for v in oracle_eval(parse("p"), records)] == [3, 9]
