"""Drone <-> ground wire protocol and a lossy, delayed datagram channel.

Frame layout (little-endian)::

    magic   4 bytes  b"OPGT"
    version u8       1
    type    u8       1 = telemetry, 2 = correction
    length  u32      payload length
    payload length bytes
    crc32   u32      IEEE CRC-32 over type, length and payload

Telemetry payload: ``u32 seq, f64 t, f64 lat, f64 lon, f64 alt`` (36 bytes).
Correction payload: ``u32 seq`` followed by opaque bytes.
"""
from __future__ import annotations

import heapq
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .geo import GeodeticPosition

MAGIC = b"OPGT"
VERSION = 1
TYPE_TELEMETRY = 1
TYPE_CORRECTION = 2
MAX_PAYLOAD = 1024

_HEADER = struct.Struct("<4sBBI")
_CRC = struct.Struct("<I")
_TELEMETRY = struct.Struct("<Idddd")


class FrameError(ValueError):
    pass


class NotAFrame(FrameError):
    pass


class CorruptFrame(FrameError):
    pass


class IncompleteFrame(FrameError):
    pass


class EncodeError(ValueError):
    pass


@dataclass(frozen=True)
class TelemetryMessage:
    seq: int
    t: float
    position: GeodeticPosition


@dataclass(frozen=True)
class CorrectionMessage:
    seq: int
    payload: bytes = b""


def _payload(msg) -> tuple[int, bytes]:
    if isinstance(msg, TelemetryMessage):
        p = msg.position
        return TYPE_TELEMETRY, _TELEMETRY.pack(msg.seq, msg.t, p.latitude, p.longitude, p.altitude)
    if isinstance(msg, CorrectionMessage):
        return TYPE_CORRECTION, struct.pack("<I", msg.seq) + bytes(msg.payload)
    raise EncodeError(f"cannot encode {type(msg).__name__}")


def encode(msg, max_payload: int = MAX_PAYLOAD) -> bytes:
    if not isinstance(msg, (TelemetryMessage, CorrectionMessage)):
        raise EncodeError(f"cannot encode {type(msg).__name__}")
    if not 0 <= msg.seq < 2**32:
        raise EncodeError("sequence number out of u32 range")
    tag, payload = _payload(msg)
    if len(payload) > max_payload:
        raise EncodeError(f"payload of {len(payload)} bytes exceeds {max_payload}")
    body = _HEADER.pack(MAGIC, VERSION, tag, len(payload)) + payload
    return body + _CRC.pack(zlib.crc32(body[5:]))


def decode(data: bytes, max_payload: int = MAX_PAYLOAD):
    """Decode one frame from the front of ``data``.

    Returns ``(message, rest)`` where ``rest`` holds unconsumed trailing bytes.
    """
    data = bytes(data)
    if len(data) < 4:
        if MAGIC.startswith(data):
            raise IncompleteFrame("truncated before end of magic")
        raise NotAFrame("bad magic")
    if data[:4] != MAGIC:
        raise NotAFrame("bad magic")
    if len(data) < _HEADER.size:
        raise IncompleteFrame("truncated header")
    _, version, tag, length = _HEADER.unpack_from(data)
    if version != VERSION:
        raise NotAFrame(f"unsupported version {version}")
    if tag not in (TYPE_TELEMETRY, TYPE_CORRECTION):
        raise NotAFrame(f"unknown message type {tag}")
    if length > max_payload:
        raise NotAFrame(f"declared payload length {length} exceeds {max_payload}")
    end = _HEADER.size + length
    if len(data) < end + _CRC.size:
        raise IncompleteFrame("truncated payload or checksum")
    (crc,) = _CRC.unpack_from(data, end)
    if zlib.crc32(data[5:end]) != crc:
        raise CorruptFrame("checksum mismatch")
    payload = data[_HEADER.size:end]
    if tag == TYPE_TELEMETRY:
        if length != _TELEMETRY.size:
            raise CorruptFrame("telemetry payload has wrong size")
        seq, t, lat, lon, alt = _TELEMETRY.unpack(payload)
        try:
            msg = TelemetryMessage(seq, t, GeodeticPosition(lat, lon, alt))
        except ValueError as exc:
            raise CorruptFrame(str(exc)) from exc
    else:
        if length < 4:
            raise CorruptFrame("correction payload too short")
        msg = CorrectionMessage(struct.unpack_from("<I", payload)[0], payload[4:])
    return msg, data[end + _CRC.size:]


# --- channel -----------------------------------------------------------------

@dataclass(frozen=True)
class LinkParams:
    latency: float = 0.05  # s
    jitter_sd: float = 0.01  # s
    drop_probability: float = 0.0

    def __post_init__(self):
        if self.latency < 0 or self.jitter_sd < 0:
            raise ValueError("latency and jitter must be nonnegative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop probability must lie in [0, 1]")


@dataclass
class Channel:
    """One-way datagram channel advanced by the simulation clock.

    Drops and delays are drawn when a datagram is sent; per sender, a
    datagram is never delivered ahead of one sent earlier.
    """

    params: LinkParams = field(default_factory=LinkParams)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    _queue: list = field(default_factory=list)
    _last_delivery: dict = field(default_factory=dict)
    _counter: int = 0
    sent: int = 0
    dropped: int = 0

    def send(self, datagram: bytes, now: float, sender: str = "drone"):
        self.sent += 1
        if self.rng.random() < self.params.drop_probability:
            self.dropped += 1
            return
        jitter = self.rng.normal(0.0, self.params.jitter_sd) if self.params.jitter_sd > 0 else 0.0
        due = now + max(self.params.latency + jitter, 0.0)
        due = max(due, self._last_delivery.get(sender, -np.inf))
        self._last_delivery[sender] = due
        heapq.heappush(self._queue, (due, self._counter, sender, datagram))
        self._counter += 1

    def step(self, now: float) -> list[tuple[float, str, bytes]]:
        """Pop every datagram due by ``now`` as ``(delivery_time, sender, bytes)``."""
        out = []
        while self._queue and self._queue[0][0] <= now:
            due, _, sender, datagram = heapq.heappop(self._queue)
            out.append((due, sender, datagram))
        return out

    def __len__(self):
        return len(self._queue)


def channel_step(channel: Channel, now: float):
    return channel.step(now)
