import csv
import itertools

import pytest

from rvc.bench import (
    LatencyReport,
    RvBenchReport,
    ThroughputReport,
    bench_latency,
    bench_throughput,
    run_rv_comparison,
    write_csv,
)
from rvc.pubsub import LoopbackBroker
from rvc.timescales import Family, GenSpec, generate_trace
from rvc.trace import write_trace_file

_counter = itertools.count()


@pytest.fixture
def endpoint():
    name = f"bench{next(_counter)}"
    broker = LoopbackBroker(name)
    yield f"local:{name}"
    broker.close()


class TestCsv:
    def rows(self, path):
        with open(path) as fh:
            return list(csv.reader(fh))

    def test_reports_to_rows(self, tmp_path):
        reports = [
            ThroughputReport("loopback", "none", 64, 1000, 0.5, 2000.0, 1.024),
            ThroughputReport("loopback", "none", 8, 1000, 0.25, 4000.0, 0.256),
        ]
        path = write_csv(reports, tmp_path / "t.csv")
        rows = self.rows(path)
        assert rows[0] == [
            "transport_label", "network_mode_label", "payload_bytes", "message_count",
            "elapsed_seconds", "msgs_per_sec", "mbits_per_sec",
        ]
        assert len(rows) == 3
        assert rows[1][2] == "64"

    def test_empty_list_header_only(self, tmp_path):
        path = write_csv([], tmp_path / "empty.csv", kind=LatencyReport)
        rows = self.rows(path)
        assert len(rows) == 1
        assert rows[0][0] == "rate_msgs_per_sec"

    def test_reread_reproduces_values(self, tmp_path):
        r = ThroughputReport("tcp", "host", 512, 12345, 1.23456789, 10000.123456, 40.9605055)
        path = write_csv([r], tmp_path / "t.csv")
        rows = self.rows(path)
        parsed = dict(zip(rows[0], rows[1]))
        for name in ("elapsed_seconds", "msgs_per_sec", "mbits_per_sec"):
            assert float(parsed[name]) == pytest.approx(getattr(r, name), rel=1e-6)
        assert int(parsed["payload_bytes"]) == 512

    def test_mixed_types_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="mixed"):
            write_csv(
                [RvBenchReport("AbsentAQ", 10, "local", 1.0),
                 ThroughputReport("t", "n", 1, 1, 1.0, 1.0, 1.0)],
                tmp_path / "m.csv",
            )


class TestThroughput:
    def test_report_invariants(self, endpoint):
        r = bench_throughput(endpoint, payload_bytes=64, message_count=2000)
        assert r.message_count == 1800  # 10% warmup excluded
        assert r.msgs_per_sec == pytest.approx(r.message_count / r.elapsed_seconds)
        assert r.mbits_per_sec == pytest.approx(r.msgs_per_sec * 64 * 8 / 1e6)
        assert r.transport_label == "loopback"

    def test_labels_recorded(self, endpoint):
        r = bench_throughput(
            endpoint, 8, 500, network_mode_label="bridge", transport_label="custom"
        )
        assert (r.transport_label, r.network_mode_label) == ("custom", "bridge")

    def test_arithmetic_examples(self):
        # forced by the report invariants
        r = ThroughputReport("t", "n", 64, 1_000_000, 0.5, 2_000_000.0, 1024.0)
        assert r.msgs_per_sec == r.message_count / r.elapsed_seconds
        assert r.mbits_per_sec == r.msgs_per_sec * r.payload_bytes * 8 / 1e6

    def test_bad_args(self, endpoint):
        with pytest.raises(ValueError):
            bench_throughput(endpoint, 0, 100)
        with pytest.raises(ValueError):
            bench_throughput(endpoint, 8, 100, warmup_fraction=0.9)


class TestLatency:
    def test_halving_rule_and_ordering(self, endpoint):
        r = bench_latency(endpoint, rate_msgs_per_sec=200, duration_seconds=0.8)
        assert r.sample_count > 50
        assert r.p50_us <= r.p99_us
        assert r.mean_us > 0
        assert r.rate_msgs_per_sec == 200

    def test_rate_flagging_fields(self, endpoint):
        r = bench_latency(endpoint, 100, 0.5)
        assert isinstance(r.rate_degraded, bool)
        assert r.achieved_msgs_per_sec > 0


class TestRvComparison:
    def test_paths_agree_and_both_timed(self, endpoint, tmp_path):
        fam = Family("AbsentAQ", 10)
        path = tmp_path / "t.jsonl"
        write_trace_file(path, generate_trace(GenSpec(fam, 400, seed=3, mode="random")))
        local_report, net_report = run_rv_comparison("AbsentAQ", 10, path, endpoint)
        assert local_report.path_label == "local"
        assert net_report.path_label == "networked"
        assert local_report.total_seconds > 0
        assert net_report.total_seconds > 0
