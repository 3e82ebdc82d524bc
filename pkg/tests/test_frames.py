import io

import pytest
from hypothesis import given, settings, strategies as st

from rvc.pubsub.frames import (
    ERR,
    MSG,
    PUB,
    SUB,
    UNSUB,
    Frame,
    FrameError,
    decode_frame,
    encode_frame,
    read_frame,
    validate_topic,
)

topic_segment = st.from_regex(r"[A-Za-z0-9_.\-]{1,12}", fullmatch=True)
topics = st.lists(topic_segment, min_size=1, max_size=4).map("/".join).filter(
    lambda t: len(t.encode()) <= 255
)

frames_strategy = st.one_of(
    st.builds(Frame, kind=st.sampled_from([SUB, UNSUB]), topic=topics),
    st.builds(
        Frame,
        kind=st.sampled_from([PUB, MSG]),
        topic=topics,
        publish_ts=st.integers(min_value=0, max_value=2**64 - 1),
        payload=st.binary(max_size=512),
    ),
    st.builds(Frame, kind=st.just(ERR), topic=topics, message=st.text(max_size=80)),
)


class TestLayout:
    def test_pub_frame_bytes(self):
        data = encode_frame(Frame(PUB, "t", publish_ts=0, payload=b"{}"))
        assert data == bytes([0x52, 0x56, 0x01, 0x03, 0x00, 0x01, 0x74] + [0] * 8 + [0, 0, 0, 2]) + b"{}"

    def test_sub_frame_bytes(self):
        assert encode_frame(Frame(SUB, "rv/in")) == bytes([0x52, 0x56, 0x01, 0x01, 0x00, 0x05]) + b"rv/in"

    def test_version_error(self):
        with pytest.raises(FrameError, match="version"):
            decode_frame(bytes([0x52, 0x56, 0x02, 0x01]))

    def test_bad_magic(self):
        with pytest.raises(FrameError, match="magic"):
            decode_frame(b"XYZ")

    def test_bad_kind(self):
        with pytest.raises(FrameError, match="kind"):
            decode_frame(bytes([0x52, 0x56, 0x01, 0x09, 0x00, 0x01, 0x74]))

    def test_zero_topic_length(self):
        with pytest.raises(FrameError, match="topic length 0"):
            decode_frame(bytes([0x52, 0x56, 0x01, 0x01, 0x00, 0x00]))

    def test_truncated_payload(self):
        data = encode_frame(Frame(PUB, "t", publish_ts=0, payload=b"abcdef"))
        with pytest.raises(FrameError, match="truncated"):
            decode_frame(data[:-2])

    def test_trailing_bytes(self):
        data = encode_frame(Frame(SUB, "t")) + b"x"
        with pytest.raises(FrameError, match="trailing"):
            decode_frame(data)


class TestTopics:
    def test_rules(self):
        validate_topic("a/b/c")
        for bad in ["", "a b", "a\tb", "/a", "a/", "a//b", "x" * 256]:
            with pytest.raises(FrameError):
                validate_topic(bad)


class TestRoundTrip:
    @settings(max_examples=300)
    @given(frames_strategy)
    def test_encode_decode_identity(self, frame):
        assert decode_frame(encode_frame(frame)) == frame

    @given(frames_strategy)
    def test_stream_reader_matches(self, frame):
        fh = io.BytesIO(encode_frame(frame) + encode_frame(frame))
        assert read_frame(fh) == frame
        assert read_frame(fh) == frame
        assert read_frame(fh) is None


class TestFuzz:
    @settings(max_examples=400)
    @given(st.binary(max_size=80))
    def test_random_bytes_never_crash(self, data):
        try:
            decode_frame(data)
        except FrameError:
            pass

    @settings(max_examples=200)
    @given(frames_strategy, st.integers(min_value=0, max_value=60), st.integers(min_value=0, max_value=255))
    def test_mutated_frames_never_crash(self, frame, pos, value):
        data = bytearray(encode_frame(frame))
        data[pos % len(data)] = value
        try:
            decode_frame(bytes(data))
        except FrameError:
            pass
