"""Bit-exact wire framing for the built-in pub/sub protocol.

Layout, all integers big-endian:

    magic 0x52 0x56 | version 0x01 | kind | u16 topic length | topic bytes
    PUB/MSG: u64 publish timestamp (ns since epoch) | u32 payload length | payload
    ERR:     u32 message length | UTF-8 message
    SUB/UNSUB: nothing further

Kinds: SUB=0x01, UNSUB=0x02, PUB=0x03, MSG=0x04, ERR=0x05.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

MAGIC = b"\x52\x56"
VERSION = 0x01

SUB = 0x01
UNSUB = 0x02
PUB = 0x03
MSG = 0x04
ERR = 0x05

_KINDS = frozenset((SUB, UNSUB, PUB, MSG, ERR))
_KIND_NAMES = {SUB: "SUB", UNSUB: "UNSUB", PUB: "PUB", MSG: "MSG", ERR: "ERR"}

MAX_TOPIC_BYTES = 255
MAX_PAYLOAD_BYTES = 2**32 - 1
MAX_TS = 2**64 - 1

_HEAD = struct.Struct(">2sBBH")
_TS_LEN = struct.Struct(">QI")
_U32 = struct.Struct(">I")


class FrameError(ValueError):
    """Malformed frame bytes or an invalid frame value."""


_topic_cache: dict[str, bytes] = {}


def validate_topic(topic: str) -> bytes:
    """Check the topic rules and return the encoded bytes."""
    cached = _topic_cache.get(topic)
    if cached is not None:
        return cached
    if not isinstance(topic, str) or not topic:
        raise FrameError("topic must be a non-empty string")
    if any(ch.isspace() for ch in topic):
        raise FrameError(f"topic {topic!r} contains whitespace")
    if any(not seg for seg in topic.split("/")):
        raise FrameError(f"topic {topic!r} has an empty segment")
    data = topic.encode("utf-8")
    if len(data) > MAX_TOPIC_BYTES:
        raise FrameError(f"topic exceeds {MAX_TOPIC_BYTES} bytes")
    if len(_topic_cache) < 4096:
        _topic_cache[topic] = data
    return data


@dataclass(frozen=True, slots=True)
class Frame:
    """One wire unit; which optional fields apply depends on ``kind``."""

    kind: int
    topic: str
    publish_ts: int | None = None  # PUB/MSG
    payload: bytes | None = None  # PUB/MSG
    message: str | None = None  # ERR

    @property
    def kind_name(self) -> str:
        return _KIND_NAMES.get(self.kind, f"0x{self.kind:02x}")


def encode_frame(f: Frame) -> bytes:
    if f.kind not in _KINDS:
        raise FrameError(f"unknown frame kind {f.kind!r}")
    topic = validate_topic(f.topic)
    head = _HEAD.pack(MAGIC, VERSION, f.kind, len(topic))
    if f.kind in (PUB, MSG):
        if f.publish_ts is None or not (0 <= f.publish_ts <= MAX_TS):
            raise FrameError(f"{f.kind_name} frame needs a u64 publish timestamp")
        if f.payload is None:
            raise FrameError(f"{f.kind_name} frame needs a payload")
        if len(f.payload) > MAX_PAYLOAD_BYTES:
            raise FrameError("payload too large")
        return b"".join((head, topic, _TS_LEN.pack(f.publish_ts, len(f.payload)), f.payload))
    if f.kind == ERR:
        if f.message is None:
            raise FrameError("ERR frame needs a message")
        msg = f.message.encode("utf-8")
        return b"".join((head, topic, _U32.pack(len(msg)), msg))
    return head + topic


def _check_head(data: bytes) -> None:
    """Report magic/version/kind problems before complaining about length."""
    if len(data) >= 2 and bytes(data[:2]) != MAGIC:
        raise FrameError("bad magic")
    if len(data) >= 3 and data[2] != VERSION:
        raise FrameError(f"unsupported version 0x{data[2]:02x}")
    if len(data) >= 4 and data[3] not in _KINDS:
        raise FrameError(f"unknown frame kind 0x{data[3]:02x}")
    if len(data) < _HEAD.size:
        raise FrameError("truncated frame header")


def decode_frame(data: bytes) -> Frame:
    """Decode exactly one frame; trailing bytes are an error."""
    _check_head(data)
    _, _, kind, topic_len = _HEAD.unpack_from(data)
    if topic_len == 0:
        raise FrameError("topic length 0")
    pos = _HEAD.size
    if len(data) < pos + topic_len:
        raise FrameError("truncated topic")
    try:
        topic = data[pos : pos + topic_len].decode("utf-8")
    except UnicodeDecodeError:
        raise FrameError("topic is not valid UTF-8") from None
    validate_topic(topic)
    pos += topic_len

    if kind in (PUB, MSG):
        if len(data) < pos + _TS_LEN.size:
            raise FrameError("truncated frame")
        ts, payload_len = _TS_LEN.unpack_from(data, pos)
        pos += _TS_LEN.size
        if len(data) < pos + payload_len:
            raise FrameError("truncated payload")
        payload = data[pos : pos + payload_len]
        pos += payload_len
        frame = Frame(kind, topic, publish_ts=ts, payload=payload)
    elif kind == ERR:
        if len(data) < pos + _U32.size:
            raise FrameError("truncated frame")
        (msg_len,) = _U32.unpack_from(data, pos)
        pos += _U32.size
        if len(data) < pos + msg_len:
            raise FrameError("truncated error message")
        try:
            message = data[pos : pos + msg_len].decode("utf-8")
        except UnicodeDecodeError:
            raise FrameError("error message is not valid UTF-8") from None
        pos += msg_len
        frame = Frame(kind, topic, message=message)
    else:
        frame = Frame(kind, topic)

    if pos != len(data):
        raise FrameError(f"{len(data) - pos} trailing bytes after frame")
    return frame


def read_frame(fh: BinaryIO) -> Frame | None:
    """Read one frame from a stream; None on clean EOF at a frame boundary."""

    def exactly(n: int) -> bytes:
        buf = fh.read(n)
        if len(buf) != n:
            raise FrameError("truncated frame (connection closed mid-frame)")
        return buf

    head = fh.read(_HEAD.size)
    if not head:
        return None
    _check_head(head)
    _, _, kind, topic_len = _HEAD.unpack(head)
    if topic_len == 0:
        raise FrameError("topic length 0")
    body = exactly(topic_len)
    if kind in (PUB, MSG):
        body += exactly(_TS_LEN.size)
        payload_len = _U32.unpack_from(body, len(body) - 4)[0]
        body += exactly(payload_len)
    elif kind == ERR:
        body += exactly(_U32.size)
        msg_len = _U32.unpack_from(body, len(body) - 4)[0]
        body += exactly(msg_len)
    return decode_frame(head + body)
