"""The runtime verification participant: subscribe, monitor, publish verdicts.

One node runs one formula over one input topic, in arrival order, and
publishes a verdict per message (or per verdict change).  Malformed or
out-of-order messages are counted and skipped; the monitor state is never
advanced by bad input.  When a message carries no explicit ``time``, its
arrival index on this node supplies the time value.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from .formula import parse
from .monitor import Monitor, MonitorError
from .pubsub.client import connect
from .trace import DecodeError, Verdict, decode_record, encode_verdict, read_trace_file

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RvNodeConfig:
    formula_text: str
    input_topic: str
    verdict_topic: str
    endpoint: str | None = None
    strict: bool = True
    emit: str = "every-message"  # or "on-change"

    def __post_init__(self) -> None:
        if self.input_topic == self.verdict_topic:
            raise ValueError("input and verdict topics must differ")
        if self.emit not in ("every-message", "on-change"):
            raise ValueError(f"unknown emit policy {self.emit!r}")


@dataclass
class NodeCounters:
    received: int = 0
    verdicts: int = 0
    decode_errors: int = 0


class _VerdictGate:
    """Applies the emit policy; returns True when a verdict should go out."""

    def __init__(self, emit: str):
        self.on_change = emit == "on-change"
        self._last: bool | None = None

    def admit(self, v: Verdict) -> bool:
        if self.on_change and v.value == self._last:
            return False
        self._last = v.value
        return True


def rv_node_run(
    cfg: RvNodeConfig,
    stop: threading.Event | None = None,
    counters: NodeCounters | None = None,
    ready: threading.Event | None = None,
) -> NodeCounters:
    """Monitor the input topic until ``stop`` is set; returns the counters.

    Transport loss raises TransportError (exit code 2 at the CLI).
    """
    formula = parse(cfg.formula_text)
    mon = Monitor(formula, strict=cfg.strict)
    gate = _VerdictGate(cfg.emit)
    counters = counters if counters is not None else NodeCounters()
    with connect(cfg.endpoint) as client:
        sub = client.subscribe(cfg.input_topic)
        if ready is not None:
            client.barrier()
            ready.set()
        log.info("monitoring %s -> %s: %s", cfg.input_topic, cfg.verdict_topic, cfg.formula_text)
        while stop is None or not stop.is_set():
            item = sub.next(timeout=0.25)
            if item is None:
                continue
            arrival_index = counters.received
            counters.received += 1
            try:
                rec = decode_record(item[2].decode("utf-8"), arrival_index)
                verdict = mon.step(rec)
            except (DecodeError, UnicodeDecodeError, MonitorError) as e:
                counters.decode_errors += 1
                log.warning("skipping message %d: %s", arrival_index, e)
                continue
            if gate.admit(verdict):
                client.publish(cfg.verdict_topic, encode_verdict(verdict))
                counters.verdicts += 1
    return counters


def rv_replay_local(
    formula_text: str, trace_path: str, emit: str = "every-message", strict: bool = True
) -> tuple[list[Verdict], float]:
    """Monitor a trace file directly; returns (verdicts, seconds).

    The wall time covers the monitoring loop over pre-loaded records, the
    same window the networked path measures (first record in, last verdict
    out).
    """
    formula = parse(formula_text)
    trace = read_trace_file(trace_path)
    return replay_records(formula, trace.records, emit, strict)


def replay_records(formula, records, emit: str = "every-message", strict: bool = True):
    """Feed records straight into a fresh monitor, timing the loop."""
    mon = Monitor(formula, strict=strict)
    gate = _VerdictGate(emit)
    out: list[Verdict] = []
    t0 = time.perf_counter()
    for rec in records:
        v = mon.step(rec)
        if gate.admit(v):
            out.append(v)
    return out, time.perf_counter() - t0
