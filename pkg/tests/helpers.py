"""Shared test utilities: random formula/trace generation and the sync checker."""

from __future__ import annotations

import random

from rvc.formula import (
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
from rvc.trace import Record

ATOMS = ("p", "q", "r")


def random_bound(rng: random.Random, max_hi: int = 8) -> Bound:
    lo = rng.randrange(0, max_hi)
    if rng.random() < 0.3:
        return Bound(lo, None)
    return Bound(lo, rng.randrange(lo, max_hi + 1))


def random_formula(rng: random.Random, depth: int = 3) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        roll = rng.random()
        if roll < 0.1:
            return Const(rng.random() < 0.5)
        return Atom(rng.choice(ATOMS))
    kind = rng.randrange(8)
    if kind == 0:
        return Not(random_formula(rng, depth - 1))
    if kind == 1:
        return And(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == 2:
        return Or(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == 3:
        return Implies(random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == 4:
        return Pre(random_formula(rng, depth - 1))
    if kind == 5:
        return Since(random_bound(rng), random_formula(rng, depth - 1), random_formula(rng, depth - 1))
    if kind == 6:
        return Once(random_bound(rng), random_formula(rng, depth - 1))
    return Historically(random_bound(rng), random_formula(rng, depth - 1))


def random_records(rng: random.Random, length: int, max_gap: int = 3) -> list[Record]:
    records = []
    t = rng.randrange(0, 3)
    for _ in range(length):
        records.append(Record(t, {a: rng.random() < 0.5 for a in ATOMS}))
        t += rng.randrange(1, max_gap + 1)
    return records
