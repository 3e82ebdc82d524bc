"""Past-time metric temporal logic formulas: AST, text parser, printer.

Concrete syntax, loosest to tightest binding:

    f -> g            implication, right-associative
    f || g            disjunction
    f && g            conjunction
    f since g         metric since, optional bound, left-associative chains
    ! f   pre f   once f   historically f      prefix operators
    true  false  atom  ( f )

Bounds are written ``[lo:hi]`` after ``since``/``once``/``historically``;
``hi`` may be ``*`` for unbounded.  An omitted bound means ``[0:*]``.
Atoms are identifiers, optionally dot-joined ("gear.engaged") to address
fields of synchronizer-merged messages.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .trace import valid_field_name


class ParseError(ValueError):
    """Syntax error with a 1-based column position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"syntax error at column {pos}: {message}")
        self.pos = pos


@dataclass(frozen=True, slots=True)
class Bound:
    """Metric interval [lo, hi]; hi=None means unbounded."""

    lo: int
    hi: int | None

    def __post_init__(self) -> None:
        if self.lo < 0:
            raise ValueError(f"bound lower end must be non-negative, got {self.lo}")
        if self.hi is not None and self.hi < self.lo:
            raise ValueError(f"empty bound [{self.lo}:{self.hi}]")

    def contains(self, delta: int) -> bool:
        return delta >= self.lo and (self.hi is None or delta <= self.hi)

    def __str__(self) -> str:
        hi = "*" if self.hi is None else str(self.hi)
        return f"[{self.lo}:{hi}]"


UNBOUNDED = Bound(0, None)


class Formula:
    """Base class for formula nodes; all nodes are immutable and comparable."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Const(Formula):
    value: bool


@dataclass(frozen=True, slots=True)
class Atom(Formula):
    name: str

    def __post_init__(self) -> None:
        if not valid_field_name(self.name):
            raise ValueError(f"invalid atom name {self.name!r}")


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Pre(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class Since(Formula):
    bound: Bound
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Once(Formula):
    bound: Bound
    child: Formula


@dataclass(frozen=True, slots=True)
class Historically(Formula):
    bound: Bound
    child: Formula


def free_atoms(f: Formula) -> set[str]:
    """The set of atom names occurring in the formula."""
    out: set[str] = set()
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Atom):
            out.add(node.name)
        elif isinstance(node, (Not, Pre, Once, Historically)):
            stack.append(node.child)
        elif isinstance(node, (And, Or, Implies, Since)):
            stack.append(node.left)
            stack.append(node.right)
    return out


# --- tokenizer -------------------------------------------------------------

_KEYWORDS = {"true", "false", "pre", "since", "once", "historically"}
_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<name>[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*)"
    r"|(?P<int>\d+)"
    r"|(?P<op>&&|\|\||->|[!()\[\]:*])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped) + 1
            raise ParseError(f"unexpected character {stripped[0]!r}", col)
        col = m.start(m.lastgroup) + 1
        tokens.append((m.lastgroup, m.group(m.lastgroup), col))
        pos = m.end()
    tokens.append(("eof", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, value, col = self.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", col)
        self.next()

    def parse(self) -> Formula:
        f = self.implies()
        kind, value, col = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected {value!r}", col)
        return f

    def implies(self) -> Formula:
        left = self.disjunction()
        kind, value, _ = self.peek()
        if kind == "op" and value == "->":
            self.next()
            return Implies(left, self.implies())
        return left

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "||":
                self.next()
                f = Or(f, self.conjunction())
            else:
                return f

    def conjunction(self) -> Formula:
        f = self.since()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value == "&&":
                self.next()
                f = And(f, self.since())
            else:
                return f

    def since(self) -> Formula:
        f = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "name" and value == "since":
                self.next()
                bound = self.maybe_bound()
                f = Since(bound, f, self.unary())
            else:
                return f

    def unary(self) -> Formula:
        kind, value, col = self.peek()
        if kind == "op" and value == "!":
            self.next()
            return Not(self.unary())
        if kind == "name" and value == "pre":
            self.next()
            return Pre(self.unary())
        if kind == "name" and value == "once":
            self.next()
            return Once(self.maybe_bound(), self.unary())
        if kind == "name" and value == "historically":
            self.next()
            return Historically(self.maybe_bound(), self.unary())
        return self.primary()

    def primary(self) -> Formula:
        kind, value, col = self.peek()
        if kind == "op" and value == "(":
            self.next()
            f = self.implies()
            self.expect_op(")")
            return f
        if kind == "name":
            self.next()
            if value == "true":
                return Const(True)
            if value == "false":
                return Const(False)
            if value in _KEYWORDS:
                raise ParseError(f"keyword {value!r} cannot be used as an atom", col)
            return Atom(value)
        raise ParseError(f"expected a formula, got {value!r}" if value else "unexpected end of input", col)

    def maybe_bound(self) -> Bound:
        kind, value, _ = self.peek()
        if kind != "op" or value != "[":
            return UNBOUNDED
        self.next()
        kind, value, col = self.next()
        if kind != "int":
            raise ParseError("expected bound lower end", col)
        lo = int(value)
        self.expect_op(":")
        kind, value, col = self.next()
        if kind == "int":
            hi: int | None = int(value)
        elif kind == "op" and value == "*":
            hi = None
        else:
            raise ParseError("expected bound upper end or '*'", col)
        self.expect_op("]")
        if hi is not None and hi < lo:
            raise ParseError(f"empty bound [{lo}:{hi}]", col)
        return Bound(lo, hi)


def parse(text: str) -> Formula:
    """Parse formula text into its AST."""
    return _Parser(text).parse()


# --- printer ---------------------------------------------------------------

# Binding strength; larger binds tighter.
_LEVEL = {Implies: 1, Or: 2, And: 3, Since: 4}
_UNARY_LEVEL = 5


def _fmt(f: Formula, parent_level: int) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + _fmt(f.child, _UNARY_LEVEL)
    if isinstance(f, Pre):
        return "pre " + _fmt(f.child, _UNARY_LEVEL)
    if isinstance(f, Once):
        bound = "" if f.bound == UNBOUNDED else str(f.bound)
        return f"once{bound} " + _fmt(f.child, _UNARY_LEVEL)
    if isinstance(f, Historically):
        bound = "" if f.bound == UNBOUNDED else str(f.bound)
        return f"historically{bound} " + _fmt(f.child, _UNARY_LEVEL)

    level = _LEVEL[type(f)]
    if isinstance(f, Implies):
        # Right-associative: parenthesize a left child at the same level.
        text = f"{_fmt(f.left, level + 1)} -> {_fmt(f.right, level)}"
    elif isinstance(f, Or):
        text = f"{_fmt(f.left, level)} || {_fmt(f.right, level + 1)}"
    elif isinstance(f, And):
        text = f"{_fmt(f.left, level)} && {_fmt(f.right, level + 1)}"
    else:
        bound = "" if f.bound == UNBOUNDED else str(f.bound)
        text = f"{_fmt(f.left, level)} since{bound} {_fmt(f.right, level + 1)}"
    if level < parent_level:
        return f"({text})"
    return text


def to_text(f: Formula) -> str:
    """Render a formula; ``parse(to_text(f)) == f``."""
    return _fmt(f, 0)
