"""The ten Timescales property families at scales 10/100/1000, plus trace
generation for them.

Families pair the classic absence / universality / recurrence / response
patterns with global, after-q, and between-q-and-r scopes, over atoms
p, q, r and a metric scale s.

``satisfying`` generation draws random records but repairs each one (flipping
the fewest atoms, preferring p, then r, then q) until the online verdict for
the step is true, so the full trace satisfies the property by construction.
``random`` generation is plain independent Bernoulli draws per atom.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator

from .formula import Formula, parse
from .monitor import Monitor
from .trace import Record, Trace

FAMILY_FORMULAS: dict[str, str] = {
    "AbsentAQ": "(once[0:{s}] q) -> !p",
    "AbsentBQR": "((!r) since[0:{s}] (q && !r)) -> !p",
    "AbsentBR": "r -> (historically[0:{s}] !p)",
    "RecurGLB": "once[0:{s}] p",
    "RespondGLB": "!((!p) since[{s}:*] q)",
    "AlwaysAQ": "(once[0:{s}] q) -> p",
    "AlwaysBR": "r -> (historically[0:{s}] p)",
    "AlwaysBQR": "((!r) since[0:{s}] (q && !r)) -> p",
    "RecurBQR": "((!r) since (q && !r)) -> once[0:{s}] (p || (q && !r))",
    "RespondBQR": "!(((!p) && (!r)) since[{s}:*] (q && !r))",
}

# Benchmark-table row order: families as listed above, scales within family.
FAMILY_NAMES: tuple[str, ...] = (
    "AbsentAQ",
    "AbsentBQR",
    "AbsentBR",
    "RecurGLB",
    "RespondGLB",
    "AlwaysAQ",
    "AlwaysBR",
    "AlwaysBQR",
    "RecurBQR",
    "RespondBQR",
)
SCALES: tuple[int, ...] = (10, 100, 1000)

ATOMS: tuple[str, ...] = ("p", "q", "r")
DEFAULT_PROBS: tuple[float, float, float] = (0.5, 0.1, 0.1)

# Repair order: fewest flips first, preferring p (the property's subject),
# then r (the scope closer), then q (the scope opener).
_REPAIR_MASKS: tuple[tuple[str, ...], ...] = (
    ("p",),
    ("r",),
    ("q",),
    ("p", "r"),
    ("p", "q"),
    ("r", "q"),
    ("p", "r", "q"),
)


@dataclass(frozen=True, slots=True)
class Family:
    name: str
    scale: int

    def __post_init__(self) -> None:
        if self.name not in FAMILY_FORMULAS:
            raise ValueError(f"unknown family {self.name!r}")
        if self.scale not in SCALES:
            raise ValueError(f"unknown scale {self.scale} (expected one of {SCALES})")

    @property
    def label(self) -> str:
        return f"{self.name}{self.scale}"


@dataclass(frozen=True, slots=True)
class GenSpec:
    family: Family
    length: int
    seed: int
    mode: str = "satisfying"
    probs: tuple[float, float, float] = DEFAULT_PROBS

    def __post_init__(self) -> None:
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.mode not in ("satisfying", "random"):
            raise ValueError(f"unknown mode {self.mode!r}")


def list_families() -> list[Family]:
    """All 30 family/scale pairs in benchmark-table order."""
    return [Family(name, scale) for name in FAMILY_NAMES for scale in SCALES]


def make_formula(fam: Family) -> Formula:
    """The property formula for a family at its scale."""
    return parse(FAMILY_FORMULAS[fam.name].format(s=fam.scale))


def default_trace_name(fam: Family, seed: int) -> str:
    return f"{fam.label}-{seed}.jsonl"


def generate_records(spec: GenSpec) -> Iterator[Record]:
    """Stream the records of a generated trace (times 0..length-1)."""
    rng = random.Random(spec.seed)
    pp, pq, pr = spec.probs
    if spec.mode == "random":
        for t in range(spec.length):
            yield Record(
                t,
                {
                    "p": rng.random() < pp,
                    "q": rng.random() < pq,
                    "r": rng.random() < pr,
                },
            )
        return

    mon = Monitor(make_formula(spec.family), strict=True)
    for t in range(spec.length):
        fields = {
            "p": rng.random() < pp,
            "q": rng.random() < pq,
            "r": rng.random() < pr,
        }
        rec = Record(t, fields)
        if not mon.peek(rec):
            for mask in _REPAIR_MASKS:
                repaired = dict(fields)
                for atom in mask:
                    repaired[atom] = not repaired[atom]
                candidate = Record(t, repaired)
                if mon.peek(candidate):
                    rec = candidate
                    break
            else:
                raise AssertionError(
                    f"no repair keeps {spec.family.label} satisfied at step {t}"
                )
        mon.step(rec)
        yield rec


def generate_trace(spec: GenSpec) -> Trace:
    """Materialize a generated trace; deterministic in the seed."""
    return Trace(list(generate_records(spec)))
