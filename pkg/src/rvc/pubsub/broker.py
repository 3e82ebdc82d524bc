"""Topic router, TCP broker, and in-process loopback broker.

Delivery is reliable-keep-all: nothing is ever dropped while a subscriber is
connected.  Every subscriber sink has a bounded queue; when a queue hits its
high watermark the publishing thread blocks, which for TCP publishers pauses
reads from their socket and pushes the backpressure all the way to the
publishing client.

The loopback broker runs the same router in-process, registered under a name
(``local:<name>`` endpoints).  Messages still pass through the wire codec, so
payload handling and costs mirror the TCP path.
"""

from __future__ import annotations

import logging
import socket
import threading
from collections import deque
from dataclasses import dataclass

from . import frames
from .frames import ERR, MSG, PUB, SUB, UNSUB, Frame, FrameError

log = logging.getLogger(__name__)

DEFAULT_PORT = 7447
DEFAULT_WATERMARK = 65536


@dataclass(frozen=True)
class QosConfig:
    """Delivery contract; only reliable-keep-all is supported."""

    delivery: str = "reliable-keep-all"
    subscriber_queue_high_watermark: int | None = DEFAULT_WATERMARK

    def __post_init__(self) -> None:
        if self.delivery != "reliable-keep-all":
            raise ValueError(f"unsupported delivery mode {self.delivery!r}")
        wm = self.subscriber_queue_high_watermark
        if wm is not None and wm < 1:
            raise ValueError("high watermark must be positive or None (unbounded)")


class ClosableQueue:
    """Bounded FIFO whose close() releases every blocked producer/consumer.

    put() blocks at capacity (keep-all backpressure) and silently drops after
    close — a closed queue means the subscriber is gone, so there is no
    delivery obligation left.  get() drains remaining items after close, then
    returns the ``closed`` sentinel.
    """

    CLOSED = object()

    def __init__(self, maxsize: int | None):
        self._maxsize = maxsize
        self._items: deque = deque()
        self._lock = threading.Lock()
        self._not_full = threading.Condition(self._lock)
        self._not_empty = threading.Condition(self._lock)
        self._closed = False

    def put(self, item) -> None:
        with self._not_full:
            if self._maxsize is not None:
                while len(self._items) >= self._maxsize and not self._closed:
                    self._not_full.wait()
            if self._closed:
                return
            self._items.append(item)
            self._not_empty.notify()

    def get(self, timeout: float | None = None):
        with self._not_empty:
            if timeout is None:
                while not self._items and not self._closed:
                    self._not_empty.wait()
            elif not self._items and not self._closed:
                self._not_empty.wait(timeout)
            if self._items:
                item = self._items.popleft()
                self._not_full.notify()
                return item
            return self.CLOSED if self._closed else None

    def close(self) -> None:
        with self._lock:
            self._closed = True
            self._not_full.notify_all()
            self._not_empty.notify_all()

    @property
    def closed(self) -> bool:
        return self._closed


class Router:
    """Exact-match topic table; fans each publish out to current subscribers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._subs: dict[str, list] = {}

    def subscribe(self, topic: str, sink) -> None:
        with self._lock:
            sinks = self._subs.setdefault(topic, [])
            if sink not in sinks:
                sinks.append(sink)

    def unsubscribe(self, topic: str, sink) -> None:
        with self._lock:
            sinks = self._subs.get(topic)
            if sinks and sink in sinks:
                sinks.remove(sink)
                if not sinks:
                    del self._subs[topic]

    def drop_sink(self, sink) -> None:
        with self._lock:
            for topic in list(self._subs):
                sinks = self._subs[topic]
                if sink in sinks:
                    sinks.remove(sink)
                    if not sinks:
                        del self._subs[topic]

    def publish(self, topic: str, publish_ts: int, payload: bytes) -> None:
        data = frames.encode_frame(Frame(MSG, topic, publish_ts=publish_ts, payload=payload))
        with self._lock:
            sinks = list(self._subs.get(topic, ()))
        for sink in sinks:
            sink.deliver(data)  # blocks at the watermark: keep-all backpressure


class _TcpConnection:
    """One accepted client connection: reader thread plus writer thread."""

    def __init__(self, broker: "Broker", sock: socket.socket, peer: str):
        self.broker = broker
        self.sock = sock
        self.peer = peer
        self.outq = ClosableQueue(broker.qos.subscriber_queue_high_watermark)
        self._reader = threading.Thread(target=self._read_loop, daemon=True, name=f"broker-rx-{peer}")
        self._writer = threading.Thread(target=self._write_loop, daemon=True, name=f"broker-tx-{peer}")

    def start(self) -> None:
        self._reader.start()
        self._writer.start()

    def deliver(self, data: bytes) -> None:
        self.outq.put(data)

    def shutdown(self) -> None:
        self.outq.close()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass

    def _read_loop(self) -> None:
        router = self.broker.router
        fh = None
        try:
            fh = self.sock.makefile("rb")
            while True:
                frame = frames.read_frame(fh)
                if frame is None:
                    break
                if frame.kind == SUB:
                    router.subscribe(frame.topic, self)
                elif frame.kind == UNSUB:
                    router.unsubscribe(frame.topic, self)
                elif frame.kind == PUB:
                    router.publish(frame.topic, frame.publish_ts, frame.payload)
                else:
                    raise FrameError(f"client may not send {frame.kind_name} frames")
        except FrameError as e:
            log.warning("protocol error from %s: %s", self.peer, str(e))
            # Answer with ERR; the writer flushes it before closing the socket.
            self.outq.put(frames.encode_frame(Frame(ERR, "broker", message=str(e))))
        except OSError:
            pass
        finally:
            router.drop_sink(self)
            self.broker._forget(self)
            self.outq.close()
            if fh is not None:
                try:
                    fh.close()  # release the makefile ref so close really closes
                except OSError:
                    pass

    def _write_loop(self) -> None:
        try:
            while True:
                data = self.outq.get()
                if data is ClosableQueue.CLOSED:
                    break
                if data is None:
                    continue
                chunks = [data]
                size = len(data)
                while size < 65536:  # coalesce whatever else is queued
                    more = self.outq.get(timeout=0)
                    if more is None or more is ClosableQueue.CLOSED:
                        break
                    chunks.append(more)
                    size += len(more)
                self.sock.sendall(b"".join(chunks))
                if self.outq.closed and not self.outq._items:
                    break
        except OSError:
            pass
        finally:
            self.broker.router.drop_sink(self)
            self.outq.close()
            try:
                self.sock.close()
            except OSError:
                pass


class Broker:
    """TCP broker serving the frame protocol on one listening endpoint."""

    def __init__(self, host: str = "127.0.0.1", port: int = DEFAULT_PORT, qos: QosConfig | None = None):
        self.qos = qos or QosConfig()
        self.router = Router()
        self._listener = socket.create_server((host, port), backlog=128)
        self.host, self.port = self._listener.getsockname()[:2]
        self._conns: set[_TcpConnection] = set()
        self._lock = threading.Lock()
        self._stopped = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True, name="broker-accept")

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    def start(self) -> "Broker":
        self._accept_thread.start()
        return self

    def _accept_loop(self) -> None:
        while not self._stopped.is_set():
            try:
                sock, addr = self._listener.accept()
            except OSError:
                break
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            conn = _TcpConnection(self, sock, f"{addr[0]}:{addr[1]}")
            with self._lock:
                self._conns.add(conn)
            conn.start()

    def _forget(self, conn: _TcpConnection) -> None:
        with self._lock:
            self._conns.discard(conn)

    def stop(self) -> None:
        self._stopped.set()
        try:
            self._listener.close()
        except OSError:
            pass
        with self._lock:
            conns = list(self._conns)
        for conn in conns:
            conn.shutdown()

    def serve_forever(self) -> None:
        self.start()
        self._stopped.wait()


# --- in-process loopback ----------------------------------------------------

_loopback_lock = threading.Lock()
_loopback_registry: dict[str, "LoopbackBroker"] = {}


class LoopbackBroker:
    """In-process broker reachable via ``local:<name>`` endpoints."""

    def __init__(self, name: str = "default", qos: QosConfig | None = None):
        self.name = name
        self.qos = qos or QosConfig()
        self.router = Router()
        self.closed = False
        self._sinks: set = set()
        self._lock = threading.Lock()
        with _loopback_lock:
            if name in _loopback_registry:
                raise OSError(f"loopback broker {name!r} already exists")
            _loopback_registry[name] = self

    def attach(self, sink) -> None:
        with self._lock:
            if self.closed:
                raise OSError(f"loopback broker {self.name!r} is closed")
            self._sinks.add(sink)

    def detach(self, sink) -> None:
        self.router.drop_sink(sink)
        with self._lock:
            self._sinks.discard(sink)

    def close(self) -> None:
        with self._lock:
            if self.closed:
                return
            self.closed = True
            sinks = list(self._sinks)
            self._sinks.clear()
        with _loopback_lock:
            if _loopback_registry.get(self.name) is self:
                del _loopback_registry[self.name]
        for sink in sinks:
            self.router.drop_sink(sink)
            sink.shutdown()

    def stop(self) -> None:
        self.close()

    @staticmethod
    def lookup(name: str) -> "LoopbackBroker":
        with _loopback_lock:
            broker = _loopback_registry.get(name)
        if broker is None or broker.closed:
            raise OSError(f"no loopback broker named {name!r}")
        return broker
