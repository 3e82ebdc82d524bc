"""Cross-network bridge: republish selected topics from one broker to another.

Filtering is allow/deny on exact topic names, deny winning.  An empty allow
set means "admit everything", but since the broker has no wildcard subscribe
the forwarding loop still needs an explicit topic list to subscribe to.
Bridges are unidirectional; a bidirectional pair must use disjoint topic
sets, validated at startup, so no message can loop.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field

from .pubsub.client import connect
from .pubsub.frames import validate_topic

log = logging.getLogger(__name__)


class BridgeError(ValueError):
    """Invalid bridge configuration."""


@dataclass(frozen=True)
class BridgeConfig:
    src_endpoint: str
    dst_endpoint: str
    allow: frozenset[str] = frozenset()
    deny: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "allow", frozenset(self.allow))
        object.__setattr__(self, "deny", frozenset(self.deny))
        if self.src_endpoint == self.dst_endpoint:
            raise BridgeError("bridge source and destination endpoints must differ")
        for t in self.allow | self.deny:
            validate_topic(t)

    @property
    def forward_topics(self) -> frozenset[str]:
        """The topics the forwarding loop subscribes to."""
        return frozenset(t for t in self.allow if bridge_admits(self, t))


def bridge_admits(cfg: BridgeConfig, topic: str) -> bool:
    """Deny wins; an empty allow set admits everything else."""
    if topic in cfg.deny:
        return False
    return not cfg.allow or topic in cfg.allow


def validate_bridge_pair(fwd: BridgeConfig, rev: BridgeConfig) -> None:
    """Reject bidirectional pairs whose admitted topics overlap (loops)."""
    if fwd.src_endpoint != rev.dst_endpoint or fwd.dst_endpoint != rev.src_endpoint:
        return
    overlap = fwd.forward_topics & rev.forward_topics
    if overlap:
        raise BridgeError(
            f"bidirectional bridge pair admits overlapping topics {sorted(overlap)}; "
            "loops are prevented by requiring disjoint topic sets"
        )


@dataclass
class BridgeStats:
    forwarded: int = 0
    by_topic: dict = field(default_factory=dict)


def bridge_run(
    cfg: BridgeConfig,
    peer: BridgeConfig | None = None,
    stop: threading.Event | None = None,
    stats: BridgeStats | None = None,
    ready: threading.Event | None = None,
) -> BridgeStats:
    """Forward every admitted message from src to dst, exactly once, in order.

    Publish timestamps pass through unchanged.  Runs until ``stop``; losing
    either connection raises TransportError so an orchestrator can restart.
    """
    topics = sorted(cfg.forward_topics)
    if not topics:
        raise BridgeError(
            "no admitted topics to forward; allow-all bridging requires an explicit allow list"
        )
    if peer is not None:
        validate_bridge_pair(cfg, peer)
        validate_bridge_pair(peer, cfg)
    stats = stats if stats is not None else BridgeStats()
    with connect(cfg.src_endpoint) as src, connect(cfg.dst_endpoint) as dst:
        sub = src.subscribe_many(topics)
        if ready is not None:
            src.barrier()
            ready.set()
        log.info("bridging %s -> %s: %s", cfg.src_endpoint, cfg.dst_endpoint, ", ".join(topics))
        while stop is None or not stop.is_set():
            item = sub.next(timeout=0.25)
            if item is None:
                continue
            topic, publish_ts, payload = item
            dst.publish(topic, payload, publish_ts=publish_ts)
            stats.forwarded += 1
            stats.by_topic[topic] = stats.by_topic.get(topic, 0) + 1
    return stats
