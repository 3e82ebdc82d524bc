import random

import pytest
from hypothesis import given, strategies as st

from rvc.formula import (
    And,
    Atom,
    Bound,
    Const,
    Historically,
    Implies,
    Not,
    Once,
    Or,
    ParseError,
    Pre,
    Since,
    UNBOUNDED,
    free_atoms,
    parse,
    to_text,
)

from helpers import random_formula


class TestParse:
    def test_atom(self):
        assert parse("p") == Atom("p")

    def test_bounded_since(self):
        assert parse("p since[3:10] q") == Since(Bound(3, 10), Atom("p"), Atom("q"))

    def test_once_with_unbounded_hi(self):
        assert parse("once[5:*] (q && !p)") == Once(Bound(5, None), And(Atom("q"), Not(Atom("p"))))

    def test_omitted_bound_is_zero_to_infinity(self):
        assert parse("p since q") == Since(UNBOUNDED, Atom("p"), Atom("q"))
        assert parse("once p") == Once(UNBOUNDED, Atom("p"))

    def test_precedence(self):
        # ! > since > && > || > ->
        assert parse("a && b || c") == Or(And(Atom("a"), Atom("b")), Atom("c"))
        assert parse("a || b -> c") == Implies(Or(Atom("a"), Atom("b")), Atom("c"))
        assert parse("!a && b") == And(Not(Atom("a")), Atom("b"))
        assert parse("a since b && c") == And(Since(UNBOUNDED, Atom("a"), Atom("b")), Atom("c"))

    def test_implies_right_associative(self):
        assert parse("a -> b -> c") == Implies(Atom("a"), Implies(Atom("b"), Atom("c")))

    def test_unary_chain(self):
        assert parse("historically[0:4] !p") == Historically(Bound(0, 4), Not(Atom("p")))
        assert parse("pre pre p") == Pre(Pre(Atom("p")))

    def test_constants(self):
        assert parse("true") == Const(True)
        assert parse("false && p") == And(Const(False), Atom("p"))

    def test_dotted_atoms(self):
        assert parse("gear.engaged -> !turn.left") == Implies(
            Atom("gear.engaged"), Not(Atom("turn.left"))
        )

    def test_syntax_error_positions(self):
        with pytest.raises(ParseError, match="column 5"):
            parse("p &&")
        with pytest.raises(ParseError, match="column"):
            parse("(p || q")
        with pytest.raises(ParseError, match="unexpected character"):
            parse("p # q")

    def test_empty_bound_rejected(self):
        with pytest.raises(ParseError, match="empty bound"):
            parse("once[5:3] p")

    def test_keywords_not_atoms(self):
        with pytest.raises(ParseError, match="keyword"):
            parse("since")

    def test_trailing_junk(self):
        with pytest.raises(ParseError, match="unexpected"):
            parse("p q")


class TestBound:
    def test_lo_must_not_exceed_hi(self):
        with pytest.raises(ValueError):
            Bound(4, 2)

    def test_contains(self):
        b = Bound(2, 5)
        assert not b.contains(1)
        assert b.contains(2) and b.contains(5)
        assert not b.contains(6)
        assert Bound(3, None).contains(10**9)


class TestFreeAtoms:
    def test_since(self):
        assert free_atoms(parse("p since q")) == {"p", "q"}

    def test_constant_has_none(self):
        assert free_atoms(parse("true")) == set()

    def test_nested(self):
        assert free_atoms(parse("historically[0:10](q -> !p)")) == {"p", "q"}


class TestPrinter:
    def test_examples(self):
        for text in [
            "p",
            "p since[3:10] q",
            "once[5:*] (q && !p)",
            "((!r) since[0:100] (q && !r)) -> !p",
            "a -> b -> c",
            "(a -> b) -> c",
            "a && (b || c)",
            "pre (p since q)",
        ]:
            f = parse(text)
            assert parse(to_text(f)) == f, text

    @given(st.integers(min_value=0, max_value=10**9))
    def test_random_roundtrip(self, seed):
        f = random_formula(random.Random(seed), depth=4)
        assert parse(to_text(f)) == f
