"""Incremental online monitor for past-time metric temporal logic.

The monitor consumes records in strictly increasing time order and emits one
boolean verdict per record, equal to the brute-force evaluation of the whole
prefix.  Per-step cost is amortized constant per operator node regardless of
bound magnitudes:

* ``pre`` keeps the previous child value.
* ``since[lo:hi]`` keeps a deque of anchor times: times at which the right
  operand held and the left operand has held ever since.  Times enter the
  deque once and leave once (cleared when the left operand fails, pruned from
  the front once older than ``hi``), so the verdict is a front/back check.

``once`` is monitored as ``true since``; ``historically f`` as
``!(true since !f)``.

Every node supports a non-committing evaluation, which lets callers test a
candidate record against the current state without consuming it (used by the
satisfying-trace generator).
"""

from __future__ import annotations

from collections import deque

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
    free_atoms,
)
from .trace import Record, Verdict


class MonitorError(ValueError):
    """Input violating the monitor's contract (ordering or missing atoms)."""


class _Node:
    __slots__ = ()

    def step(self, t: int, fields: dict[str, bool], commit: bool) -> bool:
        raise NotImplementedError


class _ConstNode(_Node):
    __slots__ = ("value",)

    def __init__(self, value: bool):
        self.value = value

    def step(self, t, fields, commit):
        return self.value


class _AtomNode(_Node):
    __slots__ = ("name", "strict")

    def __init__(self, name: str, strict: bool):
        self.name = name
        self.strict = strict

    def step(self, t, fields, commit):
        if self.strict:
            return fields[self.name]
        return fields.get(self.name, False)


class _NotNode(_Node):
    __slots__ = ("child",)

    def __init__(self, child: _Node):
        self.child = child

    def step(self, t, fields, commit):
        return not self.child.step(t, fields, commit)


class _AndNode(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: _Node, right: _Node):
        self.left = left
        self.right = right

    def step(self, t, fields, commit):
        # Both sides must step: stateful children need their updates.
        l = self.left.step(t, fields, commit)
        r = self.right.step(t, fields, commit)
        return l and r


class _OrNode(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: _Node, right: _Node):
        self.left = left
        self.right = right

    def step(self, t, fields, commit):
        l = self.left.step(t, fields, commit)
        r = self.right.step(t, fields, commit)
        return l or r


class _ImpliesNode(_Node):
    __slots__ = ("left", "right")

    def __init__(self, left: _Node, right: _Node):
        self.left = left
        self.right = right

    def step(self, t, fields, commit):
        l = self.left.step(t, fields, commit)
        r = self.right.step(t, fields, commit)
        return (not l) or r


class _PreNode(_Node):
    __slots__ = ("child", "prev")

    def __init__(self, child: _Node):
        self.child = child
        self.prev: bool | None = None

    def step(self, t, fields, commit):
        current = self.child.step(t, fields, commit)
        out = bool(self.prev) if self.prev is not None else False
        if commit:
            self.prev = current
        return out


class _SinceNode(_Node):
    __slots__ = ("lo", "hi", "left", "right", "anchors")

    def __init__(self, bound: Bound, left: _Node, right: _Node):
        self.lo = bound.lo
        self.hi = bound.hi
        self.left = left
        self.right = right
        self.anchors: deque[int] = deque()

    def step(self, t, fields, commit):
        f_val = self.left.step(t, fields, commit)
        g_val = self.right.step(t, fields, commit)

        # Anchors older than hi can never re-enter the window (time is
        # strictly increasing), so pruning is safe even without commit.
        if self.hi is not None:
            anchors = self.anchors
            while anchors and t - anchors[0] > self.hi:
                anchors.popleft()

        out = False
        if g_val and self.lo == 0:
            out = True
        elif f_val and self.anchors and t - self.anchors[0] >= self.lo:
            out = True

        if commit:
            if not f_val:
                self.anchors.clear()
            if g_val:
                self.anchors.append(t)
        return out


def _build(f: Formula, strict: bool) -> _Node:
    if isinstance(f, Const):
        return _ConstNode(f.value)
    if isinstance(f, Atom):
        return _AtomNode(f.name, strict)
    if isinstance(f, Not):
        return _NotNode(_build(f.child, strict))
    if isinstance(f, And):
        return _AndNode(_build(f.left, strict), _build(f.right, strict))
    if isinstance(f, Or):
        return _OrNode(_build(f.left, strict), _build(f.right, strict))
    if isinstance(f, Implies):
        return _ImpliesNode(_build(f.left, strict), _build(f.right, strict))
    if isinstance(f, Pre):
        return _PreNode(_build(f.child, strict))
    if isinstance(f, Since):
        return _SinceNode(f.bound, _build(f.left, strict), _build(f.right, strict))
    if isinstance(f, Once):
        return _SinceNode(f.bound, _ConstNode(True), _build(f.child, strict))
    if isinstance(f, Historically):
        return _NotNode(_SinceNode(f.bound, _ConstNode(True), _NotNode(_build(f.child, strict))))
    raise TypeError(f"unknown formula node {type(f).__name__}")


class Monitor:
    """Online evaluator for one formula over one totally ordered stream."""

    def __init__(self, formula: Formula, strict: bool = True):
        self.formula = formula
        self.strict = strict
        self.atoms = free_atoms(formula)
        self.last_time: int | None = None
        self._root = _build(formula, strict)

    def _check(self, r: Record) -> None:
        if self.last_time is not None and r.time <= self.last_time:
            raise MonitorError(
                f"non-increasing time: {r.time} after {self.last_time} "
                "(inputs must arrive in strict time order)"
            )
        if self.strict:
            for a in self.atoms:
                if a not in r.fields:
                    raise MonitorError(f"record at time {r.time} is missing atom {a!r}")

    def step(self, r: Record) -> Verdict:
        """Consume one record and return the verdict for the new prefix."""
        self._check(r)
        value = self._root.step(r.time, r.fields, True)
        self.last_time = r.time
        return Verdict(r.time, value)

    def peek(self, r: Record) -> bool:
        """Verdict the record would produce, without consuming it."""
        self._check(r)
        return self._root.step(r.time, r.fields, False)
