"""Approximate-time message synchronization across N topics.

Combines one message per configured topic into synchronization sets without
any time-difference threshold parameter.  Policy guarantees, checked by the
test suite against brute-force enumeration:

* each message is used in at most one emitted set;
* pivot times of consecutive sets strictly increase, and per-topic member
  times never decrease across sets;
* at emission no unused queued message of any single topic could replace
  that topic's member and strictly shrink the set's time span.

Selection works on full queues: once every topic has at least one queued
message, the pivot is the latest head (earliest message per topic), each
topic contributes its queued message closest to the pivot (ties prefer the
earlier one), and single-message substitutions that strictly shrink the span
are then applied until none is left.  Emitted members and everything at or
before them are dropped from their queues; a set that would not advance the
pivot past the previous set (possible when topics repeat timestamps) is held
back until later arrivals push it forward.
"""

from __future__ import annotations

import logging
import threading
from collections import deque
from dataclasses import dataclass

from .pubsub.client import connect
from .pubsub.frames import validate_topic
from .trace import DecodeError, Record, decode_record, encode_record

log = logging.getLogger(__name__)

DEFAULT_QUEUE_DEPTH = 10
DEFAULT_TOPIC_CAP = 9


class SyncError(ValueError):
    """Configuration or input violating the synchronizer contract."""


@dataclass(frozen=True)
class SyncConfig:
    topics: tuple[str, ...]
    output_topic: str
    queue_depth: int = DEFAULT_QUEUE_DEPTH
    topic_cap: int = DEFAULT_TOPIC_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "topics", tuple(self.topics))
        if len(set(self.topics)) != len(self.topics):
            raise SyncError("duplicate topics in synchronizer configuration")
        if not 2 <= len(self.topics) <= self.topic_cap:
            raise SyncError(
                f"synchronizer needs between 2 and {self.topic_cap} topics, got {len(self.topics)}"
            )
        for t in self.topics:
            validate_topic(t)
        validate_topic(self.output_topic)
        if self.queue_depth < 1:
            raise SyncError("queue depth must be positive")


@dataclass(frozen=True)
class SyncSet:
    """One synchronized output: exactly one member record per topic."""

    pivot_time: int
    members: dict[str, Record]
    span: int


@dataclass
class SyncStats:
    received: int = 0
    emitted: int = 0
    decode_errors: int = 0


class Synchronizer:
    """Queue state and emission logic; single-threaded."""

    def __init__(self, cfg: SyncConfig):
        self.cfg = cfg
        self._queues: dict[str, deque[Record]] = {t: deque() for t in cfg.topics}
        self._last_arrival: dict[str, int | None] = {t: None for t in cfg.topics}
        self._last_pivot: int | None = None

    def push(self, topic: str, r: Record) -> list[SyncSet]:
        """Queue one message and return every set this arrival completes."""
        q = self._queues.get(topic)
        if q is None:
            raise SyncError(f"unknown topic {topic!r}")
        last = self._last_arrival[topic]
        if last is not None and r.time < last:
            raise SyncError(f"time regression on {topic!r}: {r.time} after {last}")
        self._last_arrival[topic] = r.time
        q.append(r)
        if len(q) > self.cfg.queue_depth:
            q.popleft()

        out = []
        while all(self._queues.values()):
            s = self._emit()
            if s is None:
                break
            out.append(s)
        return out

    def _emit(self) -> SyncSet | None:
        queues = self._queues
        pivot = max(q[0].time for q in queues.values())
        chosen = {
            topic: min(q, key=lambda rec: (abs(rec.time - pivot), rec.time))
            for topic, q in queues.items()
        }

        def span_of(members: dict[str, Record]) -> int:
            times = [rec.time for rec in members.values()]
            return max(times) - min(times)

        # Substitute single unused messages while that strictly shrinks the
        # span; deterministic: best new span first, then topic order, then
        # queue position.
        while True:
            current = span_of(chosen)
            best = None
            for ti, topic in enumerate(self.cfg.topics):
                for mi, rec in enumerate(queues[topic]):
                    if rec is chosen[topic]:
                        continue
                    trial = dict(chosen)
                    trial[topic] = rec
                    s = span_of(trial)
                    if s < current and (best is None or (s, ti, mi) < best[:3]):
                        best = (s, ti, mi, topic, rec)
            if best is None:
                break
            chosen[best[3]] = best[4]

        times = [rec.time for rec in chosen.values()]
        if self._last_pivot is not None and max(times) <= self._last_pivot:
            # A set no later than the previous one (duplicate timestamps);
            # wait for arrivals that advance the pivot instead of emitting.
            return None
        self._last_pivot = max(times)

        for topic, rec in chosen.items():
            q = queues[topic]
            while q and q[0].time <= rec.time:
                q.popleft()

        return SyncSet(pivot_time=max(times), members=chosen, span=max(times) - min(times))


def sync_new(cfg: SyncConfig) -> Synchronizer:
    return Synchronizer(cfg)


def sync_push(state: Synchronizer, topic: str, r: Record) -> list[SyncSet]:
    return state.push(topic, r)


def sync_merge(s: SyncSet) -> Record:
    """Flatten a set into one record, prefixing fields with the topic's last
    path segment; the merged time is the set's pivot."""
    fields: dict[str, bool] = {}
    for topic in sorted(s.members):
        prefix = topic.rsplit("/", 1)[-1]
        for name, value in s.members[topic].fields.items():
            key = f"{prefix}.{name}"
            if key in fields:
                raise SyncError(f"merged field collision on {key!r}")
            fields[key] = value
    return Record(time=s.pivot_time, fields=fields)


def sync_run(
    cfg: SyncConfig,
    in_endpoint: str | None = None,
    out_endpoint: str | None = None,
    stop: threading.Event | None = None,
    stats: SyncStats | None = None,
    ready: threading.Event | None = None,
) -> SyncStats:
    """Subscribe the configured topics, synchronize, publish merged records.

    Input payloads must be JSON records with an explicit ``time``.  Undecodable
    payloads are counted and skipped.  Runs until ``stop`` is set; transport
    loss raises TransportError.
    """
    stats = stats if stats is not None else SyncStats()
    state = Synchronizer(cfg)
    with connect(in_endpoint) as cin, connect(out_endpoint) as cout:
        sub = cin.subscribe_many(cfg.topics)
        if ready is not None:
            cin.barrier()
            ready.set()
        while stop is None or not stop.is_set():
            item = sub.next(timeout=0.25)
            if item is None:
                continue
            topic, _ts, payload = item
            stats.received += 1
            try:
                rec = decode_record(payload.decode("utf-8"), None)
                emitted = state.push(topic, rec)
            except (DecodeError, UnicodeDecodeError, SyncError) as e:
                stats.decode_errors += 1
                log.warning("dropping message on %s: %s", topic, e)
                continue
            for s in emitted:
                cout.publish(cfg.output_topic, encode_record(sync_merge(s), include_time=True))
                stats.emitted += 1
    return stats
