import itertools
import statistics
import threading
import time

import pytest

from rvc.bridge import (
    BridgeConfig,
    BridgeError,
    BridgeStats,
    bridge_admits,
    bridge_run,
    validate_bridge_pair,
)
from rvc.pubsub import LoopbackBroker, connect

_counter = itertools.count()


def cfg(allow=(), deny=(), src="local:x", dst="local:y"):
    return BridgeConfig(src, dst, allow=frozenset(allow), deny=frozenset(deny))


class TestAdmits:
    def test_allow_all_by_default(self):
        assert bridge_admits(cfg(), "a")

    def test_deny_wins(self):
        assert not bridge_admits(cfg(allow=["a"], deny=["a"]), "a")

    def test_allow_list_excludes_others(self):
        assert not bridge_admits(cfg(allow=["a"]), "b")
        assert bridge_admits(cfg(allow=["a"]), "a")

    def test_deny_with_allow_all(self):
        c = cfg(deny=["secret"])
        assert not bridge_admits(c, "secret")
        assert bridge_admits(c, "other")


class TestConfig:
    def test_same_endpoints_rejected(self):
        with pytest.raises(BridgeError):
            BridgeConfig("local:x", "local:x")

    def test_bidirectional_overlap_rejected(self):
        fwd = cfg(allow=["a", "b"])
        rev = BridgeConfig("local:y", "local:x", allow=frozenset(["b", "c"]))
        with pytest.raises(BridgeError, match="overlapping"):
            validate_bridge_pair(fwd, rev)

    def test_disjoint_pair_accepted(self):
        fwd = cfg(allow=["a"])
        rev = BridgeConfig("local:y", "local:x", allow=frozenset(["b"]))
        validate_bridge_pair(fwd, rev)

    def test_unrelated_bridges_never_conflict(self):
        fwd = cfg(allow=["a"])
        other = BridgeConfig("local:z", "local:w", allow=frozenset(["a"]))
        validate_bridge_pair(fwd, other)

    def test_allow_all_run_requires_topics(self):
        with pytest.raises(BridgeError, match="explicit allow list"):
            bridge_run(cfg())


@pytest.fixture
def two_networks():
    n = next(_counter)
    src = LoopbackBroker(f"src{n}")
    dst = LoopbackBroker(f"dst{n}")
    yield f"local:src{n}", f"local:dst{n}"
    src.close()
    dst.close()


def start_bridge(config, **kw):
    stop = threading.Event()
    ready = threading.Event()
    stats = BridgeStats()
    th = threading.Thread(
        target=bridge_run, args=(config,),
        kwargs={"stop": stop, "stats": stats, "ready": ready, **kw}, daemon=True,
    )
    th.start()
    assert ready.wait(5)
    return stop, th, stats


class TestForwarding:
    def test_exactly_once_in_order(self, two_networks):
        src_ep, dst_ep = two_networks
        config = BridgeConfig(src_ep, dst_ep, allow=frozenset(["ping"]))
        stop, th, stats = start_bridge(config)
        try:
            with connect(dst_ep) as dc, connect(src_ep) as pc:
                sub = dc.subscribe("ping")
                dc.barrier()
                n = 1000
                pc.publish_many("ping", (b"%d" % i for i in range(n)), publish_ts=77)
                got = [sub.next(timeout=10) for _ in range(n)]
                assert all(item is not None for item in got)
                assert [item[2] for item in got] == [b"%d" % i for i in range(n)]
                # publish timestamps forwarded unchanged
                assert {item[1] for item in got} == {77}
                assert sub.next(timeout=0.2) is None  # exactly once
        finally:
            stop.set()
            th.join(timeout=5)
        assert stats.forwarded == 1000

    def test_denied_topics_never_cross(self, two_networks):
        src_ep, dst_ep = two_networks
        config = BridgeConfig(src_ep, dst_ep, allow=frozenset(["ok", "secret"]),
                              deny=frozenset(["secret"]))
        stop, th, _ = start_bridge(config)
        try:
            with connect(dst_ep) as dc, connect(src_ep) as pc:
                sub = dc.subscribe_many(["ok", "secret"])
                dc.barrier()
                pc.publish("secret", b"leak")
                pc.publish("ok", b"fine")
                item = sub.next(timeout=5)
                assert item is not None and item[0] == "ok"
                assert sub.next(timeout=0.2) is None
        finally:
            stop.set()
            th.join(timeout=5)

    def test_paired_overlap_fails_at_startup(self, two_networks):
        src_ep, dst_ep = two_networks
        fwd = BridgeConfig(src_ep, dst_ep, allow=frozenset(["t"]))
        rev = BridgeConfig(dst_ep, src_ep, allow=frozenset(["t"]))
        with pytest.raises(BridgeError, match="overlapping"):
            bridge_run(fwd, peer=rev)

    def test_latency_additivity(self, two_networks):
        """One-way latency through a bridge hop is at least the direct latency."""
        src_ep, dst_ep = two_networks
        config = BridgeConfig(src_ep, dst_ep, allow=frozenset(["lat"]))
        stop, th, _ = start_bridge(config)

        def one_way_means(pub_ep, sub_ep, n=300):
            lat = []
            done = threading.Event()
            with connect(sub_ep) as sc, connect(pub_ep) as pc:
                t0 = {}

                def on_msg(topic, ts, payload):
                    lat.append(time.perf_counter_ns() - t0[int(payload)])
                    if len(lat) == n:
                        done.set()

                sc.subscribe("lat", callback=on_msg)
                sc.barrier()
                pc.barrier()
                for i in range(n):
                    t0[i] = time.perf_counter_ns()
                    pc.publish("lat", b"%d" % i)
                    time.sleep(0.001)
                assert done.wait(10)
            return statistics.mean(lat)

        try:
            direct = one_way_means(dst_ep, dst_ep)
            bridged = one_way_means(src_ep, dst_ep)
        finally:
            stop.set()
            th.join(timeout=5)
        assert bridged >= direct
