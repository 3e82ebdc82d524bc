"""Runtime verification participants for publish/subscribe networks."""

from .formula import Bound, Formula, parse, to_text, free_atoms
from .monitor import Monitor, MonitorError
from .oracle import oracle_eval
from .trace import (
    DecodeError,
    Record,
    Trace,
    Verdict,
    decode_record,
    encode_record,
    encode_verdict,
    read_trace_file,
    write_trace_file,
)

__version__ = "0.1.0"

__all__ = [
    "Bound",
    "DecodeError",
    "Formula",
    "Monitor",
    "MonitorError",
    "Record",
    "Trace",
    "Verdict",
    "decode_record",
    "encode_record",
    "encode_verdict",
    "free_atoms",
    "oracle_eval",
    "parse",
    "read_trace_file",
    "to_text",
    "write_trace_file",
    "__version__",
]
