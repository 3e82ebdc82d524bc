"""Pub/sub client: connect, publish, subscribe, receive.

One Client may be shared by multiple threads (sends are serialized by a
lock); a single Subscription should be consumed by one reader at a time.
Connection loss surfaces as TransportError on the next call.  Endpoints are
``host:port`` / ``tcp://host:port`` for the TCP broker and ``local:<name>``
for an in-process loopback broker; the RVC_ENDPOINT environment variable
supplies the default.
"""

from __future__ import annotations

import os
import socket
import threading
import time

from . import frames
from .broker import DEFAULT_PORT, ClosableQueue, LoopbackBroker
from .frames import ERR, MSG, PUB, SUB, UNSUB, Frame, FrameError


class TransportError(OSError):
    """The connection to the broker is gone or refused an operation."""


DEFAULT_ENDPOINT = f"127.0.0.1:{DEFAULT_PORT}"


def default_endpoint() -> str:
    return os.environ.get("RVC_ENDPOINT", DEFAULT_ENDPOINT)


def parse_endpoint(endpoint: str | None) -> tuple[str, ...]:
    """Split an endpoint string into ("tcp", host, port) or ("local", name)."""
    ep = endpoint or default_endpoint()
    if ep.startswith("local:"):
        name = ep[len("local:") :]
        if not name:
            raise ValueError("empty loopback broker name")
        return ("local", name)
    if ep.startswith("tcp://"):
        ep = ep[len("tcp://") :]
    host, _, port = ep.rpartition(":")
    if not host:
        return ("tcp", ep, DEFAULT_PORT)
    return ("tcp", host, int(port))


class Subscription:
    """Receive side for one or more topics.

    Consumed either by polling next() or, when constructed with a callback,
    by having the callback invoked on the delivering thread (callbacks must
    be quick and must not block, or they stall the publisher).
    """

    def __init__(self, client: "Client", topics: tuple[str, ...], q: ClosableQueue | None, callback=None):
        self._client = client
        self.topics = topics
        self._q = q
        self._callback = callback

    def next(self, timeout: float | None = None):
        """The next (topic, publish_ts, payload), or None on timeout."""
        if self._q is None:
            raise ValueError("callback subscriptions cannot be polled")
        item = self._q.get(timeout)
        if item is ClosableQueue.CLOSED:
            raise TransportError(self._client._close_reason or "connection closed")
        return item

    def unsubscribe(self) -> None:
        self._client._unsubscribe(self)


class Client:
    """One participant connection, TCP or loopback."""

    def __init__(self, endpoint: str | None = None, queue_size: int | None = None):
        self._subs: dict[str, Subscription] = {}
        self._sub_lock = threading.Lock()
        self._send_lock = threading.Lock()
        self._closed = False
        self._close_reason: str | None = None
        self._queue_size = queue_size
        self.endpoint = endpoint or default_endpoint()

        parsed = parse_endpoint(endpoint)
        if parsed[0] == "local":
            try:
                self._broker = LoopbackBroker.lookup(parsed[1])
            except OSError as e:
                raise TransportError(str(e)) from None
            if queue_size is None:
                self._queue_size = self._broker.qos.subscriber_queue_high_watermark
            self._sink = _LoopbackSink(self)
            self._broker.attach(self._sink)
            self._sock = None
        else:
            _, host, port = parsed
            if self._queue_size is None:
                self._queue_size = 65536
            try:
                self._sock = socket.create_connection((host, port), timeout=10)
            except OSError as e:
                raise TransportError(f"cannot connect to {host}:{port}: {e}") from None
            self._sock.settimeout(None)
            self._sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            self._broker = None
            self._sink = None
            self._reader = threading.Thread(target=self._read_loop, daemon=True, name="client-rx")
            self._reader.start()

    def __enter__(self) -> "Client":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # --- receive path ---------------------------------------------------

    def _read_loop(self) -> None:
        reason = "connection closed by broker"
        fh = None
        try:
            fh = self._sock.makefile("rb")
            while True:
                frame = frames.read_frame(fh)
                if frame is None:
                    break
                if frame.kind == MSG:
                    self._route(frame.topic, frame.publish_ts, frame.payload)
                elif frame.kind == ERR:
                    reason = f"broker error: {frame.message}"
                    break
        except (FrameError, OSError) as e:
            reason = str(e)
        if fh is not None:
            try:
                fh.close()  # release the makefile ref so close really closes
            except OSError:
                pass
        self._shutdown(reason)

    def _route(self, topic: str, publish_ts: int, payload: bytes) -> None:
        with self._sub_lock:
            sub = self._subs.get(topic)
        if sub is None:
            return
        if sub._callback is not None:
            sub._callback(topic, publish_ts, payload)
        else:
            sub._q.put((topic, publish_ts, payload))

    # --- commands ---------------------------------------------------------

    def publish(self, topic: str, payload: bytes | str, publish_ts: int | None = None) -> None:
        """Publish one message; raises TransportError once the link is gone."""
        if isinstance(payload, str):
            payload = payload.encode("utf-8")
        if publish_ts is None:
            publish_ts = time.time_ns()
        if self._closed:
            raise TransportError(self._close_reason or "client closed")
        if self._sock is None:
            if self._broker.closed:
                self._shutdown("broker closed")
                raise TransportError(self._close_reason)
            self._broker.router.publish(topic, publish_ts, payload)
            return
        data = frames.encode_frame(Frame(PUB, topic, publish_ts=publish_ts, payload=payload))
        self._send(data)

    def publish_many(self, topic: str, payloads, publish_ts: int | None = None) -> int:
        """Publish a sequence of payloads on one topic, coalescing writes.

        Per-topic order is preserved; returns the number published.
        """
        if publish_ts is None:
            publish_ts = time.time_ns()
        if self._closed:
            raise TransportError(self._close_reason or "client closed")
        n = 0
        if self._sock is None:
            if self._broker.closed:
                self._shutdown("broker closed")
                raise TransportError(self._close_reason)
            router_publish = self._broker.router.publish
            for payload in payloads:
                if isinstance(payload, str):
                    payload = payload.encode("utf-8")
                router_publish(topic, publish_ts, payload)
                n += 1
            return n
        chunks = []
        size = 0
        for payload in payloads:
            if isinstance(payload, str):
                payload = payload.encode("utf-8")
            data = frames.encode_frame(Frame(PUB, topic, publish_ts=publish_ts, payload=payload))
            chunks.append(data)
            size += len(data)
            n += 1
            if size >= 65536:
                self._send(b"".join(chunks))
                chunks.clear()
                size = 0
        if chunks:
            self._send(b"".join(chunks))
        return n

    def barrier(self, timeout: float = 10.0) -> None:
        """Block until the broker has processed everything this client sent.

        Subscribes a unique probe topic, publishes to it, and waits for the
        loopback delivery; because the broker handles one connection's frames
        in order, receipt proves every earlier frame (SUBs included) took
        effect.
        """
        topic = f"__barrier/{id(self)}/{time.monotonic_ns()}"
        got = threading.Event()
        sub = self.subscribe(topic, callback=lambda *_: got.set())
        try:
            self.publish(topic, b"", publish_ts=0)
            if not got.wait(timeout):
                raise TransportError("broker did not answer the barrier probe")
        finally:
            sub.unsubscribe()

    def subscribe(self, topic: str, callback=None) -> Subscription:
        return self.subscribe_many((topic,), callback=callback)

    def subscribe_many(self, topics, callback=None) -> Subscription:
        """Subscribe several topics into one shared receive queue."""
        topics = tuple(topics)
        for t in topics:
            frames.validate_topic(t)
        if self._closed:
            raise TransportError(self._close_reason or "client closed")
        q = None if callback is not None else ClosableQueue(self._queue_size)
        sub = Subscription(self, topics, q, callback)
        with self._sub_lock:
            for t in topics:
                if t in self._subs:
                    raise ValueError(f"already subscribed to {t!r} on this client")
            for t in topics:
                self._subs[t] = sub
        try:
            if self._sock is None:
                for t in topics:
                    self._broker.router.subscribe(t, self._sink)
            else:
                for t in topics:
                    self._send(frames.encode_frame(Frame(SUB, t)))
        except TransportError:
            with self._sub_lock:
                for t in topics:
                    self._subs.pop(t, None)
            raise
        return sub

    def _unsubscribe(self, sub: Subscription) -> None:
        with self._sub_lock:
            for t in sub.topics:
                if self._subs.get(t) is sub:
                    del self._subs[t]
        if sub._q is not None:
            sub._q.close()
        if self._closed:
            return
        if self._sock is None:
            for t in sub.topics:
                self._broker.router.unsubscribe(t, self._sink)
        else:
            for t in sub.topics:
                self._send(frames.encode_frame(Frame(UNSUB, t)))

    def _send(self, data: bytes) -> None:
        try:
            with self._send_lock:
                self._sock.sendall(data)
        except OSError as e:
            self._shutdown(f"send failed: {e}")
            raise TransportError(self._close_reason) from None

    # --- teardown ---------------------------------------------------------

    def _shutdown(self, reason: str) -> None:
        if self._closed:
            return
        self._closed = True
        self._close_reason = reason
        with self._sub_lock:
            subs = list(self._subs.values())
            self._subs.clear()
        for sub in subs:
            if sub._q is not None:
                sub._q.close()
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        elif self._broker is not None:
            self._broker.detach(self._sink)

    def close(self) -> None:
        self._shutdown("client closed")

    @property
    def closed(self) -> bool:
        return self._closed


class _LoopbackSink:
    """Router-facing delivery endpoint of a loopback client."""

    def __init__(self, client: Client):
        self._client = client

    def deliver(self, data: bytes) -> None:
        frame = frames.decode_frame(data)
        self._client._route(frame.topic, frame.publish_ts, frame.payload)

    def shutdown(self) -> None:
        self._client._shutdown("broker closed")


def connect(endpoint: str | None = None, **kwargs) -> Client:
    """Connect to a broker endpoint (RVC_ENDPOINT supplies the default)."""
    return Client(endpoint, **kwargs)
