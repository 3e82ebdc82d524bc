"""rvc: one executable for every participant role and benchmark campaign.

Exit codes: 0 success or clean shutdown, 1 usage/configuration error,
2 runtime/transport failure, 3 verification failure (a property violated or
two evaluation paths disagreeing).
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import signal
import sys
import threading

from . import bench as bench_mod
from .bench import (
    BenchError,
    VerificationError,
    bench_latency,
    bench_throughput,
    latency_sweep,
    results_path,
    run_rv_comparison,
    rv_matrix,
    throughput_sweep,
    write_csv,
)
from .bridge import BridgeConfig, bridge_run
from .formula import parse as parse_formula
from .monitor import Monitor
from .node import NodeCounters, RvNodeConfig, rv_node_run
from .oracle import oracle_eval
from .pubsub.broker import Broker, QosConfig
from .pubsub.client import TransportError, connect, default_endpoint, parse_endpoint
from .sync import SyncConfig, SyncStats, sync_run
from .timescales import Family, GenSpec, SCALES, default_trace_name, generate_trace
from .trace import encode_record, encode_verdict, read_trace_file, write_trace_file

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VERIFICATION = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise _UsageError(message)


def _comma_list(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _load_formula_text(spec: str) -> str:
    if spec.startswith("@"):
        with open(spec[1:], "r", encoding="utf-8") as fh:
            return fh.read().strip()
    return spec


@contextlib.contextmanager
def _stop_on_signal():
    """A stop event set by SIGINT/SIGTERM, for clean shutdown with exit 0."""
    stop = threading.Event()
    previous = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        previous[sig] = signal.signal(sig, lambda *_: stop.set())
    try:
        yield stop
    finally:
        for sig, handler in previous.items():
            signal.signal(sig, handler)


def build_parser() -> _Parser:
    parser = _Parser(prog="rvc", description=__doc__)
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"],
                        help="stderr log verbosity (default: warning)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def endpoint_arg(p, flag="--endpoint", **kw):
        p.add_argument(flag, default=None,
                       help=f"broker endpoint (default: $RVC_ENDPOINT or {default_endpoint()})", **kw)

    p = sub.add_parser("broker", help="run the TCP broker")
    endpoint_arg(p)
    p.add_argument("--watermark", type=int, default=QosConfig().subscriber_queue_high_watermark,
                   help="per-subscriber queue high watermark (messages)")
    p.set_defaults(func=_cmd_broker)

    p = sub.add_parser("monitor",
                       help="run a monitor node: subscribe, verify, publish verdicts")
    p.add_argument("--formula", required=True, help="formula text, or @file")
    p.add_argument("--in", dest="input_topic", required=True, help="input topic")
    p.add_argument("--out", dest="verdict_topic", required=True, help="verdict topic")
    endpoint_arg(p)
    p.add_argument("--lenient", action="store_true",
                   help="treat missing atoms as false instead of erroring")
    p.add_argument("--on-change", action="store_true",
                   help="publish only when the verdict changes")
    p.set_defaults(func=_cmd_monitor)

    p = sub.add_parser("sync",
                       help="synchronize messages from several topics onto one")
    p.add_argument("--topics", required=True, help="comma-separated input topics")
    p.add_argument("--output", required=True, help="output topic for merged records")
    p.add_argument("--depth", type=int, default=10, help="per-topic queue depth (default 10)")
    p.add_argument("--cap", type=int, default=9, help="maximum topic count (default 9)")
    endpoint_arg(p)
    p.add_argument("--out-endpoint", default=None,
                   help="publish merged records here (default: same as --endpoint)")
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("bridge",
                       help="forward topics from one broker to another")
    p.add_argument("--src", required=True, help="source endpoint")
    p.add_argument("--dst", required=True, help="destination endpoint")
    p.add_argument("--allow", default="", help="comma-separated topics to forward")
    p.add_argument("--deny", default="", help="comma-separated topics to block (deny wins)")
    p.add_argument("--peer-topics", default="",
                   help="admitted topics of the reverse bridge, for loop validation")
    p.set_defaults(func=_cmd_bridge)

    p = sub.add_parser("gen", help="generate a benchmark trace file")
    p.add_argument("--family", required=True, help="property family name, e.g. AbsentAQ")
    p.add_argument("--scale", type=int, required=True, choices=list(SCALES))
    p.add_argument("--length", type=int, required=True, help="number of records")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--mode", default="satisfying", choices=["satisfying", "random"])
    p.add_argument("--out", default=None, help="output path (default <family><scale>-<seed>.jsonl)")
    p.add_argument("--probs", default=None,
                   help="comma-separated Bernoulli probabilities for p,q,r (default 0.5,0.1,0.1)")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("replay",
                       help="publish a trace file's records onto a topic")
    p.add_argument("--trace", required=True)
    p.add_argument("--topic", required=True)
    endpoint_arg(p)
    p.add_argument("--strip-time", action="store_true",
                   help="publish records without the explicit time member")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("oracle",
                       help="evaluate a formula over a trace file (reference semantics)")
    p.add_argument("--formula", required=True, help="formula text, or @file")
    p.add_argument("--trace", required=True)
    p.add_argument("--quiet", action="store_true", help="suppress per-record verdict lines")
    p.add_argument("--compare-monitor", action="store_true",
                   help="also run the incremental monitor and require equality")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("bench", help="benchmark campaigns")
    bsub = p.add_subparsers(dest="campaign", metavar="CAMPAIGN")

    bt = bsub.add_parser("throughput", help="messages/s vs payload size")
    endpoint_arg(bt)
    bt.add_argument("--payload-bytes", type=int, default=64)
    bt.add_argument("--count", type=int, default=20000)
    bt.add_argument("--warmup", type=float, default=0.1)
    bt.add_argument("--sweep", action="store_true", help="run the 7-point payload sweep")
    bt.add_argument("--count-scale", type=float, default=1.0,
                    help="scale factor for sweep message counts")
    bt.add_argument("--network-mode-label", default="none",
                    help="recorded container network mode label (bridge/host/ipvlan/macvlan/none)")
    bt.add_argument("--transport-label", default=None)
    bt.add_argument("--out", default=None, help="CSV path (default results/throughput/<ts>.csv)")
    bt.set_defaults(func=_cmd_bench_throughput)

    bl = bsub.add_parser("latency", help="one-way latency vs publish rate")
    endpoint_arg(bl)
    bl.add_argument("--rate", type=int, default=1000, help="target publish rate, msgs/s")
    bl.add_argument("--duration", type=float, default=3.0, help="seconds per rate point")
    bl.add_argument("--sweep", action="store_true", help="run the 5-point rate sweep")
    bl.add_argument("--out", default=None, help="CSV path (default results/latency/<ts>.csv)")
    bl.set_defaults(func=_cmd_bench_latency)

    br = bsub.add_parser("rv",
                         help="monitor overhead: networked vs local trace replay")
    endpoint_arg(br)
    br.add_argument("--family", default=None)
    br.add_argument("--scale", type=int, default=None, choices=list(SCALES))
    br.add_argument("--trace", default=None, help="trace file (required unless --matrix)")
    br.add_argument("--mode", default="compare", choices=["local", "networked", "compare"])
    br.add_argument("--matrix", action="store_true",
                    help="run all 30 family/scale pairs, local and networked")
    br.add_argument("--length", type=int, default=bench_mod.DEFAULT_RV_TRACE_LENGTH,
                    help="generated trace length for --matrix")
    br.add_argument("--seed", type=int, default=1)
    br.add_argument("--trace-dir", default=None, help="directory for generated matrix traces")
    br.add_argument("--out", default=None, help="CSV path (default results/rv/<ts>.csv)")
    br.set_defaults(func=_cmd_bench_rv)

    return parser


# --- command handlers --------------------------------------------------------


def _cmd_broker(args) -> int:
    parsed = parse_endpoint(args.endpoint)
    if parsed[0] != "tcp":
        raise _UsageError("the broker command serves TCP endpoints only")
    qos = QosConfig(subscriber_queue_high_watermark=args.watermark or None)
    broker = Broker(host=parsed[1], port=parsed[2], qos=qos)
    print(f"broker listening on {broker.endpoint}", flush=True)
    with _stop_on_signal() as stop:
        broker.start()
        stop.wait()
        broker.stop()
    return EXIT_OK


def _cmd_monitor(args) -> int:
    cfg = RvNodeConfig(
        formula_text=_load_formula_text(args.formula),
        input_topic=args.input_topic,
        verdict_topic=args.verdict_topic,
        endpoint=args.endpoint,
        strict=not args.lenient,
        emit="on-change" if args.on_change else "every-message",
    )
    parse_formula(cfg.formula_text)  # config errors before connecting
    counters = NodeCounters()
    with _stop_on_signal() as stop:
        rv_node_run(cfg, stop=stop, counters=counters)
    print(
        f"received={counters.received} verdicts={counters.verdicts} "
        f"decode_errors={counters.decode_errors}",
        flush=True,
    )
    return EXIT_OK


def _cmd_sync(args) -> int:
    cfg = SyncConfig(
        topics=tuple(_comma_list(args.topics)),
        output_topic=args.output,
        queue_depth=args.depth,
        topic_cap=args.cap,
    )
    stats = SyncStats()
    with _stop_on_signal() as stop:
        sync_run(cfg, args.endpoint, args.out_endpoint or args.endpoint, stop=stop, stats=stats)
    print(
        f"received={stats.received} emitted={stats.emitted} decode_errors={stats.decode_errors}",
        flush=True,
    )
    return EXIT_OK


def _cmd_bridge(args) -> int:
    cfg = BridgeConfig(
        src_endpoint=args.src,
        dst_endpoint=args.dst,
        allow=frozenset(_comma_list(args.allow)),
        deny=frozenset(_comma_list(args.deny)),
    )
    peer = None
    peer_topics = _comma_list(args.peer_topics)
    if peer_topics:
        peer = BridgeConfig(
            src_endpoint=args.dst, dst_endpoint=args.src, allow=frozenset(peer_topics)
        )
    from .bridge import BridgeStats

    stats = BridgeStats()
    with _stop_on_signal() as stop:
        bridge_run(cfg, peer=peer, stop=stop, stats=stats)
    print(f"forwarded={stats.forwarded}", flush=True)
    return EXIT_OK


def _cmd_gen(args) -> int:
    fam = Family(args.family, args.scale)
    kwargs = {}
    if args.probs:
        probs = tuple(float(x) for x in _comma_list(args.probs))
        if len(probs) != 3:
            raise _UsageError("--probs needs exactly three values (p,q,r)")
        kwargs["probs"] = probs
    spec = GenSpec(fam, args.length, args.seed, mode=args.mode, **kwargs)
    out = args.out or default_trace_name(fam, args.seed)
    write_trace_file(out, generate_trace(spec))
    print(out, flush=True)
    return EXIT_OK


def _cmd_replay(args) -> int:
    trace = read_trace_file(args.trace)
    with connect(args.endpoint) as client:
        n = client.publish_many(
            args.topic,
            (encode_record(r, include_time=not args.strip_time) for r in trace),
        )
    print(f"published={n}", flush=True)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    formula = parse_formula(_load_formula_text(args.formula))
    trace = read_trace_file(args.trace)
    verdicts = oracle_eval(formula, trace)
    if args.compare_monitor:
        mon = Monitor(formula)
        online = [mon.step(r) for r in trace]
        if online != verdicts:
            print("rvc: monitor/oracle mismatch", file=sys.stderr)
            return EXIT_VERIFICATION
    if not args.quiet:
        out = sys.stdout
        for v in verdicts:
            out.write(encode_verdict(v))
            out.write("\n")
        out.flush()
    return EXIT_OK if all(v.value for v in verdicts) else EXIT_VERIFICATION


def _cmd_bench_throughput(args) -> int:
    kwargs = dict(
        warmup_fraction=args.warmup,
        transport_label=args.transport_label,
        network_mode_label=args.network_mode_label,
    )
    if args.sweep:
        reports = throughput_sweep(args.endpoint, count_scale=args.count_scale, **kwargs)
    else:
        reports = [bench_throughput(args.endpoint, args.payload_bytes, args.count, **kwargs)]
    out = args.out or results_path("throughput")
    write_csv(reports, out)
    for r in reports:
        print(f"{r.payload_bytes}B: {r.msgs_per_sec:,.0f} msg/s  {r.mbits_per_sec:,.1f} Mbit/s")
    print(out, flush=True)
    return EXIT_OK


def _cmd_bench_latency(args) -> int:
    if args.sweep:
        reports = latency_sweep(args.endpoint, duration_seconds=args.duration)
    else:
        reports = [bench_latency(args.endpoint, args.rate, args.duration)]
    out = args.out or results_path("latency")
    write_csv(reports, out)
    for r in reports:
        flag = "  [rate degraded]" if r.rate_degraded else ""
        print(
            f"{r.rate_msgs_per_sec} msg/s: mean {r.mean_us:.1f}us "
            f"p50 {r.p50_us:.1f}us p99 {r.p99_us:.1f}us{flag}"
        )
    print(out, flush=True)
    return EXIT_OK


def _cmd_bench_rv(args) -> int:
    if args.matrix:
        reports = rv_matrix(
            args.endpoint, length=args.length, seed=args.seed, trace_dir=args.trace_dir
        )
    else:
        if not (args.family and args.scale and args.trace):
            raise _UsageError("bench rv needs --family, --scale and --trace (or --matrix)")
        if args.mode == "compare":
            local_report, net_report = run_rv_comparison(
                args.family, args.scale, args.trace, args.endpoint
            )
            reports = [net_report, local_report]
        else:
            reports = [
                bench_mod.bench_rv(
                    args.family, args.scale, args.trace, mode=args.mode, endpoint=args.endpoint
                )
            ]
    out = args.out or results_path("rv")
    write_csv(reports, out)
    for r in reports:
        print(f"{r.family}{r.scale} {r.path_label}: {r.total_seconds:.3f}s")
    print(out, flush=True)
    return EXIT_OK


# --- dispatch ----------------------------------------------------------------


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "command", None) is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "bench" and getattr(args, "campaign", None) is None:
            raise _UsageError("bench needs a campaign: throughput, latency, or rv")
        logging.basicConfig(
            level=getattr(logging, args.log_level.upper()),
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        return args.func(args)
    except _UsageError as e:
        print(f"rvc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except VerificationError as e:
        print(f"rvc: verification failure: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (TransportError, BenchError) as e:
        print(f"rvc: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as e:  # config errors: formula/trace/sync/bridge/frame validation
        print(f"rvc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"rvc: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
