"""Message, trace, and verdict data model plus the JSON text codec.

One message is a flat JSON object mapping boolean fields to values, with an
optional non-negative integer ``time`` member.  Traces are JSON Lines files,
one message per line, with ``time`` mandatory and strictly increasing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

# Plain identifiers, or dot-joined identifier paths as produced by the
# message synchronizer ("gear.engaged").
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*\Z")
_VALID_NAMES: set[str] = set()


class DecodeError(ValueError):
    """A message or trace line that does not satisfy the codec contract."""


def valid_field_name(name: str) -> bool:
    if name in _VALID_NAMES:
        return True
    if isinstance(name, str) and _NAME_RE.match(name):
        # Tiny cache: real workloads reuse a handful of atom names.
        if len(_VALID_NAMES) < 4096:
            _VALID_NAMES.add(name)
        return True
    return False


@dataclass(frozen=True, slots=True)
class Record:
    """One timestamped message: boolean fields at a discrete time value."""

    time: int
    fields: dict[str, bool]

    def __post_init__(self) -> None:
        if not isinstance(self.time, int) or isinstance(self.time, bool) or self.time < 0:
            raise ValueError(f"record time must be a non-negative integer, got {self.time!r}")
        for name in self.fields:
            if not valid_field_name(name):
                raise ValueError(f"invalid field name {name!r}")


@dataclass(frozen=True, slots=True)
class Verdict:
    """Monitor output for the trace prefix ending at ``time``."""

    time: int
    value: bool


@dataclass
class Trace:
    """An ordered message log with strictly increasing times."""

    records: list[Record] = field(default_factory=list)

    def __post_init__(self) -> None:
        prev = None
        for i, r in enumerate(self.records):
            if prev is not None and r.time <= prev:
                raise ValueError(f"non-increasing time at record {i}: {r.time} after {prev}")
            prev = r.time

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)


def decode_record(text: str, step: int | None) -> Record:
    """Decode one JSON message into a Record.

    ``step`` supplies the time value when the message carries no explicit
    ``time`` member; pass None to require an explicit ``time`` (trace files).
    """

    def reject_duplicates(pairs):
        seen = {}
        for k, v in pairs:
            if k in seen:
                raise DecodeError(f"duplicate member {k!r}")
            seen[k] = v
        return seen

    try:
        obj = json.loads(text, object_pairs_hook=reject_duplicates)
    except DecodeError:
        raise
    except json.JSONDecodeError as e:
        raise DecodeError(f"malformed JSON: {e.msg} at column {e.colno}") from None
    if not isinstance(obj, dict):
        raise DecodeError("message is not a JSON object")

    time = step
    fields: dict[str, bool] = {}
    for name, value in obj.items():
        if name == "time":
            if isinstance(value, bool) or not isinstance(value, int):
                raise DecodeError(f"non-integer time {value!r}")
            if value < 0:
                raise DecodeError(f"negative time {value}")
            time = value
        elif isinstance(value, bool):
            fields[name] = value
        else:
            raise DecodeError(f"non-boolean field {name}")
    if time is None:
        raise DecodeError("missing time member")
    return Record(time=time, fields=fields)


def encode_record(r: Record, include_time: bool = False) -> str:
    """Encode a Record as a single-line JSON object with sorted keys.

    ``time`` is emitted first when requested, so that
    ``decode_record(encode_record(r, True), 0) == r``.
    """
    items: dict[str, object] = {}
    if include_time:
        items["time"] = r.time
    for name in sorted(r.fields):
        items[name] = r.fields[name]
    return json.dumps(items, separators=(",", ":"))


def encode_verdict(v: Verdict) -> str:
    """Encode a Verdict as ``{"time":<t>,"verdict":<bool>}``, in that order."""
    return json.dumps({"time": v.time, "verdict": v.value}, separators=(",", ":"))


def read_trace_file(path: str | Path) -> Trace:
    """Load a JSON Lines trace; every line needs an explicit ``time``."""
    records: list[Record] = []
    prev: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = decode_record(line, None)
            except DecodeError as e:
                raise DecodeError(f"line {lineno}: {e}") from None
            if prev is not None and rec.time <= prev:
                raise DecodeError(f"non-increasing time at line {lineno}")
            prev = rec.time
            records.append(rec)
    t = Trace.__new__(Trace)  # order already checked line by line
    t.records = records
    return t


def write_trace_file(path: str | Path, trace: Trace | Iterable[Record]) -> None:
    """Write records as JSON Lines with explicit times, one per line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in trace:
            fh.write(encode_record(r, include_time=True))
            fh.write("\n")
