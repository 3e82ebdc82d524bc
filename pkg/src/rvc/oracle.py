"""Brute-force offline evaluator for past-time metric temporal logic.

This is the reference semantics every other evaluation path is tested
against.  Each operator is unfolded directly over the whole trace, with no
incremental state; quadratic cost is deliberate.

Satisfaction at index n of a trace with times t_0..t_n:

    atom a              a's value in record n
    pre f               n > 0 and f holds at n-1
    f since[lo:hi] g    exists k <= n with t_n - t_k in [lo, hi], g at k,
                        and f at every j with k < j <= n
    once[b] f           true since[b] f
    historically[b] f   !(once[b] !f)
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .formula import (
    And,
    Atom,
    Bound,
    Const,
    Formula,
    Historically,
    Implies,
    Not,
    Once,
    Or,
    Pre,
    Since,
)
from .trace import Record, Trace, Verdict


class MissingAtomError(KeyError):
    """An atom required by the formula is absent from some record."""

    def __init__(self, index: int, atom: str):
        super().__init__(f"record {index} is missing atom {atom!r}")
        self.index = index
        self.atom = atom


def _atom_column(records: Sequence[Record], name: str) -> np.ndarray:
    col = np.empty(len(records), dtype=bool)
    for i, r in enumerate(records):
        try:
            col[i] = r.fields[name]
        except KeyError:
            raise MissingAtomError(i, name) from None
    return col


def _since_seq(bound: Bound, f_seq: np.ndarray, g_seq: np.ndarray, times: np.ndarray) -> np.ndarray:
    n = len(times)
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        delta = times[i] - times[: i + 1]
        in_bound = delta >= bound.lo
        if bound.hi is not None:
            in_bound &= delta <= bound.hi
        # f_ok[k] = f holds at every j with k < j <= i (vacuously at k = i)
        f_ok = np.empty(i + 1, dtype=bool)
        f_ok[i] = True
        if i > 0:
            f_ok[:i] = np.logical_and.accumulate(f_seq[i:0:-1])[::-1]
        out[i] = bool(np.any(in_bound & g_seq[: i + 1] & f_ok))
    return out


def _eval_seq(f: Formula, records: Sequence[Record], times: np.ndarray) -> np.ndarray:
    n = len(records)
    if isinstance(f, Const):
        return np.full(n, f.value, dtype=bool)
    if isinstance(f, Atom):
        return _atom_column(records, f.name)
    if isinstance(f, Not):
        return ~_eval_seq(f.child, records, times)
    if isinstance(f, And):
        return _eval_seq(f.left, records, times) & _eval_seq(f.right, records, times)
    if isinstance(f, Or):
        return _eval_seq(f.left, records, times) | _eval_seq(f.right, records, times)
    if isinstance(f, Implies):
        return ~_eval_seq(f.left, records, times) | _eval_seq(f.right, records, times)
    if isinstance(f, Pre):
        child = _eval_seq(f.child, records, times)
        out = np.empty(n, dtype=bool)
        out[0:1] = False
        out[1:] = child[:-1]
        return out
    if isinstance(f, Since):
        return _since_seq(
            f.bound, _eval_seq(f.left, records, times), _eval_seq(f.right, records, times), times
        )
    if isinstance(f, Once):
        return _since_seq(f.bound, np.ones(n, dtype=bool), _eval_seq(f.child, records, times), times)
    if isinstance(f, Historically):
        return ~_since_seq(f.bound, np.ones(n, dtype=bool), ~_eval_seq(f.child, records, times), times)
    raise TypeError(f"unknown formula node {type(f).__name__}")


def oracle_eval(f: Formula, trace: Trace | Sequence[Record]) -> list[Verdict]:
    """Evaluate the formula over every prefix of the trace.

    All atoms of the formula must be present in every record.
    """
    records = trace.records if isinstance(trace, Trace) else list(trace)
    if not records:
        return []
    times = np.array([r.time for r in records], dtype=np.int64)
    values = _eval_seq(f, records, times)
    return [Verdict(int(t), bool(v)) for t, v in zip(times, values)]
