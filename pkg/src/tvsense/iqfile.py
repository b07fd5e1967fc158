"""Binary IQ capture files.

Layout (little-endian): magic "IQF1", u32 version = 1, f64 sample rate in Hz,
u64 sample count, then count interleaved (f32 I, f32 Q) pairs.  The format
round-trips losslessly; writing a buffer quantizes its samples to float32.
"""

from __future__ import annotations

import struct

import numpy as np

from .core import IqBuffer

_MAGIC = b"IQF1"
_VERSION = 1
_HEADER = struct.Struct("<4sIdQ")


class IqFileError(ValueError):
    """Malformed IQ file: bad magic, unsupported version, or truncated payload."""


def write_iq(path: str, buf: IqBuffer) -> None:
    payload = np.empty(2 * len(buf), dtype="<f4")
    payload[0::2] = buf.samples.real
    payload[1::2] = buf.samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, float(buf.sample_rate_hz), len(buf)))
        fh.write(payload.tobytes())


def read_iq(path: str) -> IqBuffer:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise IqFileError("truncated header")
        magic, version, rate, count = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise IqFileError(f"bad magic {magic!r}, expected {_MAGIC!r}")
        if version != _VERSION:
            raise IqFileError(f"unsupported version {version}")
        payload = fh.read()
    expected = 8 * count
    if len(payload) < expected:
        raise IqFileError(f"truncated payload: expected {expected}, found {len(payload)}")
    raw = np.frombuffer(payload[:expected], dtype="<f4")
    samples = raw[0::2].astype(np.float64) + 1j * raw[1::2].astype(np.float64)
    return IqBuffer(samples, rate)
