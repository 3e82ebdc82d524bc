"""Benchmark harness: throughput vs payload, one-way latency vs rate, and
monitor overhead networked vs local-file replay.

Latency follows the round-trip convention: a pinger publishes at a target
rate, an echo participant republishes each payload, and one-way latency is
half the measured round trip on one monotonic clock.  Rate control is hybrid
sleep/yield; when the achieved rate falls below 90% of the target the report
is flagged rather than discarded.

The monitor-overhead campaign replays a trace file through the broker into a
live monitor node and compares against feeding the same records straight into
a monitor in-process; both paths must produce byte-identical verdict streams.
"""

from __future__ import annotations

import csv
import gc
import logging
import statistics
import sys
import threading
import time
from dataclasses import dataclass, fields
from pathlib import Path

from .node import NodeCounters, RvNodeConfig, rv_node_run, replay_records
from .formula import to_text
from .pubsub.client import connect
from .timescales import Family, GenSpec, generate_trace, make_formula
from .trace import encode_record, encode_verdict, read_trace_file, write_trace_file

log = logging.getLogger(__name__)

PAYLOAD_SWEEP = (8, 64, 512, 4096, 32768, 262144, 1048576)
RATE_SWEEP = (10, 100, 1000, 10000, 100000)
DEFAULT_RV_TRACE_LENGTH = 1_000_000

# Message counts per payload size keeping each sweep point to a few seconds.
_SWEEP_COUNTS = {8: 20000, 64: 20000, 512: 20000, 4096: 10000, 32768: 2000, 262144: 256, 1048576: 64}


class BenchError(RuntimeError):
    """A benchmark could not produce a valid measurement (e.g. lost messages)."""


class VerificationError(AssertionError):
    """Two evaluation paths that must agree disagreed."""


@dataclass(frozen=True)
class ThroughputReport:
    transport_label: str
    network_mode_label: str
    payload_bytes: int
    message_count: int
    elapsed_seconds: float
    msgs_per_sec: float
    mbits_per_sec: float


@dataclass(frozen=True)
class LatencyReport:
    rate_msgs_per_sec: int
    sample_count: int
    p50_us: float
    p99_us: float
    mean_us: float
    achieved_msgs_per_sec: float
    rate_degraded: bool


@dataclass(frozen=True)
class RvBenchReport:
    family: str
    scale: int
    path_label: str  # "networked" or "local"
    total_seconds: float


def _transport_label(endpoint: str | None) -> str:
    return "loopback" if endpoint is not None and endpoint.startswith("local:") else "tcp"


# --- throughput -------------------------------------------------------------


class _ArrivalCounter:
    """Counts deliveries and timestamps the post-warmup window."""

    def __init__(self, total: int, warmup: int):
        self.total = total
        self.warmup = warmup
        self.n = 0
        self.t_first = 0.0
        self.t_last = 0.0
        self.done = threading.Event()

    def __call__(self, topic, publish_ts, payload) -> None:
        self.n += 1
        if self.n > self.warmup:
            self.t_last = time.perf_counter()
            if self.n == self.warmup + 1:
                self.t_first = self.t_last
            if self.n == self.total:
                self.done.set()


def bench_throughput(
    endpoint: str | None,
    payload_bytes: int,
    message_count: int,
    warmup_fraction: float = 0.1,
    transport_label: str | None = None,
    network_mode_label: str = "none",
    timeout: float = 300.0,
) -> ThroughputReport:
    """Flood fixed-size payloads through the broker and measure delivery rate.

    Every message must arrive (keep-all); the report covers the post-warmup
    window on the subscriber's monotonic clock.
    """
    if payload_bytes < 1:
        raise ValueError("payload_bytes must be >= 1")
    if not 0 <= warmup_fraction <= 0.5:
        raise ValueError("warmup_fraction must be in [0, 0.5]")
    warmup = int(message_count * warmup_fraction)
    counted = message_count - warmup
    if counted < 2:
        raise ValueError("too few post-warmup messages to time")

    topic = "bench/throughput"
    payload = b"\x5a" * payload_bytes
    counter = _ArrivalCounter(message_count, warmup)
    with connect(endpoint) as sub_client, connect(endpoint) as pub_client:
        sub_client.subscribe(topic, callback=counter)
        sub_client.barrier()
        pub_client.publish_many(topic, (payload for _ in range(message_count)))
        if not counter.done.wait(timeout):
            raise BenchError(
                f"reliability violation: received {counter.n} of {message_count} messages"
            )
    elapsed = max(counter.t_last - counter.t_first, 1e-9)
    rate = counted / elapsed
    return ThroughputReport(
        transport_label=transport_label or _transport_label(endpoint),
        network_mode_label=network_mode_label,
        payload_bytes=payload_bytes,
        message_count=counted,
        elapsed_seconds=elapsed,
        msgs_per_sec=rate,
        mbits_per_sec=rate * payload_bytes * 8 / 1e6,
    )


def throughput_sweep(
    endpoint: str | None,
    payloads=PAYLOAD_SWEEP,
    count_scale: float = 1.0,
    **kwargs,
) -> list[ThroughputReport]:
    reports = []
    for size in payloads:
        count = max(64, int(_SWEEP_COUNTS.get(size, 1000) * count_scale))
        reports.append(bench_throughput(endpoint, size, count, **kwargs))
        log.info("throughput %dB: %.0f msg/s", size, reports[-1].msgs_per_sec)
    return reports


# --- latency ----------------------------------------------------------------


def echo_run(
    endpoint: str | None,
    ping_topic: str = "bench/ping",
    pong_topic: str = "bench/pong",
    stop: threading.Event | None = None,
    ready: threading.Event | None = None,
) -> int:
    """Republish every payload arriving on ping_topic onto pong_topic."""
    n = 0
    with connect(endpoint) as client:
        sub = client.subscribe(ping_topic)
        if ready is not None:
            client.barrier()
            ready.set()
        while stop is None or not stop.is_set():
            item = sub.next(timeout=0.25)
            if item is None:
                continue
            client.publish(pong_topic, item[2], publish_ts=item[1])
            n += 1
    return n


def bench_latency(
    endpoint: str | None,
    rate_msgs_per_sec: int,
    duration_seconds: float,
    warmup_fraction: float = 0.1,
    payload_bytes: int = 16,
) -> LatencyReport:
    """Open-loop ping/pong at a target rate; one-way latency = round trip / 2.

    Spawns the echo responder itself so a single machine (and a single
    command) can run the whole campaign.
    """
    if rate_msgs_per_sec < 1:
        raise ValueError("rate must be >= 1 msg/s")
    stop = threading.Event()
    ready = threading.Event()
    echo = threading.Thread(
        target=echo_run, args=(endpoint, "bench/ping", "bench/pong", stop, ready), daemon=True
    )
    echo.start()
    if not ready.wait(10):
        raise BenchError("echo responder did not come up")

    send_ns: dict[int, int] = {}
    latencies_us: list[float] = []
    perf_ns = time.perf_counter_ns

    def on_pong(topic, publish_ts, payload) -> None:
        seq = int(payload[: payload.index(58)])  # ':' terminates the sequence number
        latencies_us.append((perf_ns() - send_ns[seq]) / 2000.0)

    filler = b"x" * payload_bytes
    period = 1.0 / rate_msgs_per_sec
    old_interval = sys.getswitchinterval()
    pinger = connect(endpoint)
    try:
        pinger.subscribe("bench/pong", callback=on_pong)
        pinger.barrier()
        sys.setswitchinterval(0.0002)
        gc.disable()
        publish = pinger.publish
        perf = time.perf_counter
        sleep = time.sleep
        start = perf()
        end = start + duration_seconds
        next_t = start
        i = 0
        while True:
            now = perf()
            if now >= end:
                break
            if now < next_t:
                gap = next_t - now
                if gap > 0.0015:
                    sleep(gap - 0.001)  # coarse sleep, then yield-spin
                else:
                    sleep(0)
                continue
            payload = b"%d:%s" % (i, filler)
            send_ns[i] = perf_ns()
            publish("bench/ping", payload, publish_ts=0)
            i += 1
            next_t += period
            if now - next_t > 2 * period:
                next_t = now  # cap catch-up bursts so queues stay shallow
        sent = i
        actual = perf() - start
        deadline = time.monotonic() + 2.0
        while len(latencies_us) < sent and time.monotonic() < deadline:
            time.sleep(0.01)
    finally:
        gc.enable()
        sys.setswitchinterval(old_interval)
        stop.set()
        pinger.close()
        echo.join(timeout=5)

    if not latencies_us:
        raise BenchError("no pongs received (echo responder absent?)")
    warm = latencies_us[int(len(latencies_us) * warmup_fraction) :]
    if len(warm) < 2:
        warm = latencies_us
    cuts = statistics.quantiles(warm, n=100)
    achieved = sent / actual
    return LatencyReport(
        rate_msgs_per_sec=rate_msgs_per_sec,
        sample_count=len(warm),
        p50_us=cuts[49],
        p99_us=cuts[98],
        mean_us=statistics.fmean(warm),
        achieved_msgs_per_sec=achieved,
        rate_degraded=achieved < 0.9 * rate_msgs_per_sec,
    )


def latency_sweep(
    endpoint: str | None, rates=RATE_SWEEP, duration_seconds: float = 3.0, **kwargs
) -> list[LatencyReport]:
    reports = []
    for rate in rates:
        reports.append(bench_latency(endpoint, rate, duration_seconds, **kwargs))
        r = reports[-1]
        log.info(
            "latency at %d msg/s: mean %.1fus p50 %.1fus p99 %.1fus%s",
            rate, r.mean_us, r.p50_us, r.p99_us, " (rate degraded)" if r.rate_degraded else "",
        )
    return reports


# --- monitor overhead: networked vs local replay ----------------------------


def bench_rv(
    family: str,
    scale: int,
    trace_path: str | Path,
    mode: str = "local",
    endpoint: str | None = None,
    emit: str = "every-message",
) -> RvBenchReport:
    """Total wall time to monitor one trace, locally or through the broker."""
    fam = Family(family, scale)
    if mode == "local":
        report, _ = _rv_local(fam, trace_path, emit)
    elif mode == "networked":
        report, _ = _rv_networked(fam, trace_path, endpoint, emit)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return report


def _rv_local(fam: Family, trace_path, emit: str):
    trace = read_trace_file(trace_path)
    verdicts, seconds = replay_records(make_formula(fam), trace.records, emit)
    report = RvBenchReport(fam.name, fam.scale, "local", seconds)
    return report, [encode_verdict(v).encode("utf-8") for v in verdicts]


def _rv_networked(fam: Family, trace_path, endpoint: str | None, emit: str):
    records = read_trace_file(trace_path).records
    in_topic = f"rv/in/{fam.label}"
    out_topic = f"rv/verdict/{fam.label}"
    cfg = RvNodeConfig(
        formula_text=to_text(make_formula(fam)),
        input_topic=in_topic,
        verdict_topic=out_topic,
        endpoint=endpoint,
        emit=emit,
    )
    stop = threading.Event()
    ready = threading.Event()
    counters = NodeCounters()
    node = threading.Thread(
        target=rv_node_run, args=(cfg,), kwargs={"stop": stop, "counters": counters, "ready": ready},
        daemon=True,
    )
    node.start()
    if not ready.wait(10):
        stop.set()
        raise BenchError("monitor node did not come up")

    expected = len(records) if emit == "every-message" else None
    verdicts: list[bytes] = []
    state = {"t_last": 0.0}
    done = threading.Event()

    def on_verdict(topic, publish_ts, payload) -> None:
        verdicts.append(payload)
        state["t_last"] = time.perf_counter()
        if expected is not None and len(verdicts) == expected:
            done.set()

    try:
        with connect(endpoint) as collector, connect(endpoint) as replayer:
            collector.subscribe(out_topic, callback=on_verdict)
            collector.barrier()
            payloads = [encode_record(r, include_time=True).encode("utf-8") for r in records]
            t0 = time.perf_counter()
            replayer.publish_many(in_topic, payloads)
            timeout = 60.0 + len(records) / 1000.0
            if expected is not None:
                if not done.wait(timeout):
                    raise BenchError(f"lost verdicts: {len(verdicts)} of {expected} arrived")
            else:
                last = -1
                while len(verdicts) != last:
                    last = len(verdicts)
                    time.sleep(1.0)
            total = state["t_last"] - t0
    finally:
        stop.set()
        node.join(timeout=10)
    return RvBenchReport(fam.name, fam.scale, "networked", total), verdicts


def run_rv_comparison(
    family: str, scale: int, trace_path, endpoint: str | None, emit: str = "every-message"
) -> tuple[RvBenchReport, RvBenchReport]:
    """Run both paths over one trace; verdict streams must be byte-identical."""
    fam = Family(family, scale)
    local_report, local_verdicts = _rv_local(fam, trace_path, emit)
    net_report, net_verdicts = _rv_networked(fam, trace_path, endpoint, emit)
    if local_verdicts != net_verdicts:
        raise VerificationError(
            f"{fam.label}: networked verdict stream differs from local replay "
            f"({len(net_verdicts)} vs {len(local_verdicts)} verdicts)"
        )
    return local_report, net_report


def rv_matrix(
    endpoint: str | None,
    families=None,
    length: int = DEFAULT_RV_TRACE_LENGTH,
    seed: int = 1,
    trace_dir: str | Path | None = None,
    mode: str = "random",
) -> list[RvBenchReport]:
    """Run the full family/scale matrix, local and networked, one trace each."""
    from .timescales import list_families

    fams = list(families) if families is not None else list_families()
    trace_dir = Path(trace_dir) if trace_dir is not None else None
    reports: list[RvBenchReport] = []
    for fam in fams:
        if trace_dir is not None:
            trace_dir.mkdir(parents=True, exist_ok=True)
            path = trace_dir / f"{fam.label}-{seed}.jsonl"
        else:
            path = Path(f"{fam.label}-{seed}.jsonl")
        if not path.exists():
            write_trace_file(path, generate_trace(GenSpec(fam, length, seed, mode=mode)))
        local_report, net_report = run_rv_comparison(fam.name, fam.scale, path, endpoint)
        reports.extend((net_report, local_report))
        log.info(
            "%s: networked %.3fs local %.3fs", fam.label,
            net_report.total_seconds, local_report.total_seconds,
        )
    return reports


# --- CSV --------------------------------------------------------------------


def write_csv(reports, path: str | Path, kind=None) -> Path:
    """Header plus one row per report; columns follow the dataclass fields.

    ``kind`` names the report type so an empty list still gets its header.
    """
    path = Path(path)
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    reports = list(reports)
    if reports:
        kinds = {type(r) for r in reports}
        if len(kinds) > 1:
            raise ValueError(f"mixed report types: {sorted(k.__name__ for k in kinds)}")
        kind = type(reports[0])
    names = [f.name for f in fields(kind)] if kind is not None else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if names:
            writer.writerow(names)
        for r in reports:
            writer.writerow([_csv_value(getattr(r, n)) for n in names])
    return path


def _csv_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_path(campaign: str, root: str | Path = "results") -> Path:
    """results/<campaign>/<timestamp>.csv"""
    stamp = time.strftime("%Y%m%dT%H%M%S", time.gmtime())
    out = Path(root) / campaign / f"{stamp}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    return out
