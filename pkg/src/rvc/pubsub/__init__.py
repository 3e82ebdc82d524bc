"""Minimal reliable topic-based pub/sub transport (broker, client, framing)."""

from .broker import Broker, LoopbackBroker, QosConfig, Router
from .client import Client, Subscription, TransportError, connect, default_endpoint, parse_endpoint
from .frames import Frame, FrameError, decode_frame, encode_frame, read_frame, validate_topic

__all__ = [
    "Broker",
    "Client",
    "Frame",
    "FrameError",
    "LoopbackBroker",
    "QosConfig",
    "Router",
    "Subscription",
    "TransportError",
    "connect",
    "decode_frame",
    "default_endpoint",
    "encode_frame",
    "parse_endpoint",
    "read_frame",
    "validate_topic",
]
