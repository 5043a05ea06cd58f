"""Phasor buffering, event capture and duty-cycled transmission.

Frames are stored as four 16-bit codes (8 bytes) in a 128-kB ring.  Time is
not stored per frame; the drained byte stream groups frames into blocks
whose header carries the UTC second and the index of the first frame.

Stream layout (little-endian)::

    block  := header frame*
    header := b"PMUF0001" u32 utc_second u16 start_index u16 frame_count
    frame  := u16 v_mag u16 v_phase u16 i_mag u16 i_phase
"""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .estimator.core import PhasorFrame

FRAME_BYTES = 8
CAPACITY_BYTES = 128 * 1024
BLOCK_MAGIC = b"PMUF0001"
_HEADER = struct.Struct("<8sIHH")
_FRAME = struct.Struct("<4H")
CODE_MAX = 0xFFFF
PHASE_LSB = 2.0 * math.pi / 65536


@dataclass(frozen=True)
class QuantizedFrame:
    v_mag_q: int
    v_phase_q: int
    i_mag_q: int
    i_phase_q: int
    saturated: bool = field(default=False, compare=False)

    def to_bytes(self) -> bytes:
        return _FRAME.pack(self.v_mag_q, self.v_phase_q, self.i_mag_q, self.i_phase_q)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "QuantizedFrame":
        return cls(*_FRAME.unpack(raw))


def _mag_code(mag: float, full_scale: float) -> tuple[int, bool]:
    if not mag >= 0:
        raise ValueError("magnitude must be non-negative")
    code = int(round(mag / full_scale * CODE_MAX))
    if mag >= full_scale or code > CODE_MAX:
        return CODE_MAX, True
    return code, False


def _phase_code(phase: float) -> int:
    # floor(phase/LSB) avoids the phase + pi rounding up to 2 pi just below +pi
    return (math.floor(phase / PHASE_LSB) + 32768) % 65536


def quantize(frame: PhasorFrame, mag_full_scale: float = 2.0) -> QuantizedFrame:
    """Map magnitudes onto 0..65535 over [0, full_scale) and phases over [-pi, pi)."""
    vm, vs = _mag_code(frame.v_mag, mag_full_scale)
    im, is_ = _mag_code(frame.i_mag, mag_full_scale)
    return QuantizedFrame(vm, _phase_code(frame.v_phase), im, _phase_code(frame.i_phase),
                          saturated=vs or is_)


def dequantize(q: QuantizedFrame, mag_full_scale: float = 2.0, n: int = 0,
               timestamp: float = math.nan) -> PhasorFrame:
    """Invert :func:`quantize` to bin centres; frequency and ROCOF are not carried."""
    mag = mag_full_scale / CODE_MAX
    return PhasorFrame(
        n=n, timestamp=timestamp,
        v_mag=q.v_mag_q * mag, v_phase=-math.pi + (q.v_phase_q + 0.5) * PHASE_LSB,
        i_mag=q.i_mag_q * mag, i_phase=-math.pi + (q.i_phase_q + 0.5) * PHASE_LSB,
        frequency=math.nan, rocof=math.nan)


class Mode(enum.Enum):
    CONTINUOUS = "continuous"
    EVENT_RECORDER = "event"
    IMMEDIATE = "immediate"


@dataclass(frozen=True)
class StreamRecord:
    utc_second: int
    index: int
    frame: QuantizedFrame


class RingBuffer:
    """Fixed-capacity frame store.

    Continuous mode overwrites the oldest frame when full.  In event mode
    the ring keeps rolling history; :meth:`trigger` freezes ``pre`` frames
    of history plus the next ``post`` frames into a capture, and
    :meth:`drain` then emits only completed captures.
    """

    def __init__(self, capacity_bytes: int = CAPACITY_BYTES, mode: Mode = Mode.CONTINUOUS,
                 pre_trigger: int = 60, post_trigger: int = 240):
        if capacity_bytes < FRAME_BYTES:
            raise ValueError("capacity must hold at least one frame")
        self.capacity_bytes = capacity_bytes
        self.capacity = capacity_bytes // FRAME_BYTES
        self.mode = Mode(mode)
        self.pre_trigger = pre_trigger
        self.post_trigger = post_trigger
        self._codes = np.zeros((self.capacity, 4), dtype=np.uint16)
        self._second = np.zeros(self.capacity, dtype=np.uint32)
        self._index = np.zeros(self.capacity, dtype=np.uint16)
        self.head = 0  # next write position
        self.count = 0
        self.overwritten = 0
        self.pushed = 0
        self._pending: list[list] = []  # [frames so far, post frames still needed]
        self.captures: list[list[StreamRecord]] = []

    @property
    def tail(self) -> int:
        return (self.head - self.count) % self.capacity

    @property
    def used_bytes(self) -> int:
        return self.count * FRAME_BYTES

    @property
    def seconds_of_storage(self) -> float:
        return self.capacity / 60.0

    def __len__(self) -> int:
        return self.count

    def push(self, frame: QuantizedFrame, utc_second: int, index: int) -> bool:
        """Append one frame; returns True if the oldest frame was overwritten."""
        pos = self.head
        self._codes[pos] = (frame.v_mag_q, frame.v_phase_q, frame.i_mag_q, frame.i_phase_q)
        self._second[pos] = utc_second
        self._index[pos] = index
        self.head = (pos + 1) % self.capacity
        self.pushed += 1
        lost = self.count == self.capacity
        if lost:
            self.overwritten += 1
        else:
            self.count += 1
        if self._pending:
            rec = StreamRecord(int(utc_second), int(index), frame)
            for cap in self._pending:
                cap[0].append(rec)
                cap[1] -= 1
            done = [cap for cap in self._pending if cap[1] <= 0]
            self._pending = [cap for cap in self._pending if cap[1] > 0]
            self.captures.extend(cap[0] for cap in done)
        return lost

    def records(self) -> list[StreamRecord]:
        """Buffered frames, oldest first."""
        out = []
        for q in range(self.count):
            pos = (self.tail + q) % self.capacity
            c = self._codes[pos]
            out.append(StreamRecord(int(self._second[pos]), int(self._index[pos]),
                                    QuantizedFrame(*(int(v) for v in c))))
        return out

    def trigger(self) -> None:
        """Start an event capture at the most recently pushed frame."""
        history = self.records()[-(self.pre_trigger + 1):] if self.count else []
        self._pending.append([history, self.post_trigger])

    def pop(self, n: int) -> list[StreamRecord]:
        """Remove and return up to ``n`` oldest frames."""
        recs = self.records()[:n]
        self.count -= len(recs)
        return recs

    def drain(self) -> bytes:
        """Emit and clear buffered data as a block-framed byte stream."""
        if self.mode is Mode.EVENT_RECORDER:
            caps, self.captures = self.captures, []
            return b"".join(encode_records(c) for c in caps)
        recs = self.records()
        self.count = 0
        return encode_records(recs)


def encode_records(records) -> bytes:
    """Group records into blocks of consecutive indices within one second."""
    out = bytearray()
    block: list[StreamRecord] = []

    def flush():
        if block:
            out.extend(_HEADER.pack(BLOCK_MAGIC, block[0].utc_second, block[0].index, len(block)))
            for r in block:
                out.extend(r.frame.to_bytes())
            block.clear()

    for r in records:
        if block and (r.utc_second != block[-1].utc_second or r.index != block[-1].index + 1
                      or len(block) >= 0xFFFF):
            flush()
        block.append(r)
    flush()
    return bytes(out)


def decode_stream(data: bytes) -> list[StreamRecord]:
    """Parse a drained byte stream back into records."""
    out = []
    pos = 0
    while pos < len(data):
        if len(data) - pos < _HEADER.size:
            raise ValueError(f"truncated block header at byte {pos}")
        magic, second, start, count = _HEADER.unpack_from(data, pos)
        if magic != BLOCK_MAGIC:
            raise ValueError(f"bad block magic at byte {pos}")
        pos += _HEADER.size
        end = pos + count * FRAME_BYTES
        if end > len(data):
            raise ValueError(f"truncated block payload at byte {pos}")
        for q in range(count):
            frame = QuantizedFrame(*_FRAME.unpack_from(data, pos + q * FRAME_BYTES))
            out.append(StreamRecord(second, start + q, frame))
        pos = end
    return out


# --- event detection --------------------------------------------------------

@dataclass(frozen=True)
class EventThresholds:
    mag_fraction: float = 0.1
    nominal_mag: float = 1.0 / math.sqrt(2.0)
    freq_band: float = 0.5
    f_nominal: float = 60.0


def _event_flags(v_mag, freq, thr: EventThresholds) -> np.ndarray:
    v_mag = np.asarray(v_mag, dtype=np.float64)
    freq = np.asarray(freq, dtype=np.float64)
    flags = np.zeros(v_mag.size, dtype=bool)
    if v_mag.size >= 2:
        flags[1:] = np.abs(np.diff(v_mag)) > thr.mag_fraction * thr.nominal_mag
    with np.errstate(invalid="ignore"):
        flags |= np.abs(freq - thr.f_nominal) > thr.freq_band
    return flags


def detect_event(frames, thresholds: EventThresholds = EventThresholds()) -> bool:
    """True when a magnitude jump or an out-of-band frequency is present."""
    if isinstance(frames, (list, tuple)):
        if len(frames) < 2:
            raise ValueError("need at least two frames")
        v = [f.v_mag for f in frames]
        fr = [f.frequency for f in frames]
    else:
        if len(frames) < 2:
            raise ValueError("need at least two frames")
        v, fr = frames.v_mag, frames.frequency
    return bool(_event_flags(v, fr, thresholds).any())


def find_events(frames, thresholds: EventThresholds = EventThresholds()) -> np.ndarray:
    """Indices of frames at which the detector fires."""
    return np.flatnonzero(_event_flags(frames.v_mag, frames.frequency, thresholds))


# --- duty-cycled transmission ------------------------------------------------

@dataclass(frozen=True)
class DutyCycleConfig:
    duty: float = 0.18
    mode: Mode = Mode.CONTINUOUS
    period: float = 10.0  # s, one wake/sleep cycle in continuous mode
    link_rate: float = 4000.0  # payload bytes per second while awake

    def __post_init__(self):
        if not 0 < self.duty <= 1:
            raise ValueError("duty must be in (0, 1]")
        if self.period <= 0 or self.link_rate <= 0:
            raise ValueError("period and link_rate must be positive")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass
class TransmissionReport:
    windows: list[tuple[float, float]]
    effective_duty: float
    frames_produced: int
    frames_sent: int
    overwritten: int
    max_buffered: int
    overflow_risk: bool


def schedule_transmission(config: DutyCycleConfig, buffer: RingBuffer | None = None,
                          duration: float = 600.0, frame_rate: float = 60.0,
                          events=()) -> TransmissionReport:
    """Discrete-event simulation of the radio at frame resolution.

    ``events`` lists trigger times (s) for event-recorder mode; each wakes
    the radio long enough to send one capture.
    """
    buf = buffer if buffer is not None else RingBuffer()
    dt = 1.0 / frame_rate
    steps = int(round(duration * frame_rate))
    demand = FRAME_BYTES * frame_rate
    zero = QuantizedFrame(0, 0, 0, 0)

    if config.mode is Mode.IMMEDIATE:
        for q in range(steps):
            buf.push(zero, q // int(frame_rate), q % int(frame_rate))
            buf.pop(1)
        return TransmissionReport([(0.0, duration)], 1.0, steps, steps, buf.overwritten, 1,
                                  config.link_rate < demand)

    if config.mode is Mode.EVENT_RECORDER:
        capture_bytes = (buf.pre_trigger + 1 + buf.post_trigger) * FRAME_BYTES
        awake = capture_bytes / config.link_rate
        windows = []
        for t_ev in sorted(events):
            start = t_ev + buf.post_trigger * dt  # capture completes
            if windows and start < windows[-1][1]:
                start = windows[-1][1]
            windows.append((start, start + awake))
        on = sum(min(e, duration) - s for s, e in windows if s < duration)
        sent = len(windows) * (buf.pre_trigger + 1 + buf.post_trigger)
        return TransmissionReport(windows, on / duration, steps, sent, 0, 0, False)

    period = config.period
    on_len = config.duty * period
    windows = []
    t = 0.0
    while t < duration:
        windows.append((t, min(t + on_len, duration)))
        t += period
    budget = 0.0
    sent = 0
    max_buf = 0
    for q in range(steps):
        t0, t1 = q * dt, (q + 1) * dt
        buf.push(zero, q // int(frame_rate), q % int(frame_rate))
        # awake time overlapping this step
        w = q * dt // period
        ws = w * period
        overlap = max(0.0, min(t1, ws + on_len) - max(t0, ws))
        if overlap > 0:
            budget += overlap * config.link_rate
            n = min(int(budget // FRAME_BYTES), len(buf))
            if n:
                buf.pop(n)
                sent += n
                budget -= n * FRAME_BYTES
            if len(buf) == 0:
                budget = min(budget, FRAME_BYTES)  # idle link cannot bank capacity
        max_buf = max(max_buf, len(buf))
    on = sum(e - s for s, e in windows)
    return TransmissionReport(windows, on / duration, steps, sent, buf.overwritten, max_buf,
                              config.link_rate * config.duty < demand)
