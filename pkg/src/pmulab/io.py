"""Waveform and frame file formats.

Waveform binary (little-endian)::

    b"PMUSIG01" u32 fs u32 count float64[count]

Waveform CSV has columns ``t,value``; frame CSV the columns written by
:meth:`FrameSeries.to_csv`.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .estimator.core import FRAME_FIELDS, FrameSeries
from .signalgen import SampledSignal

SIGNAL_MAGIC = b"PMUSIG01"
_SIG_HEADER = struct.Struct("<8sII")
FRAME_CSV_COLUMNS = ("n", "timestamp", "v_mag", "v_phase", "i_mag", "i_phase", "freq", "rocof",
                     "saturation_count")


def write_waveform_csv(sig: SampledSignal, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, x in zip(sig.times, sig.samples):
            w.writerow([repr(float(t)), repr(float(x))])


def read_waveform_csv(path) -> SampledSignal:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] < 2:
        raise ValueError("need at least two samples to infer the sample rate")
    fs = 1.0 / float(np.median(np.diff(data[:, 0])))
    return SampledSignal(fs=round(fs, 6), samples=data[:, 1].copy(), t0=float(data[0, 0]))


def write_waveform_bin(sig: SampledSignal, path) -> None:
    fs = int(round(sig.fs))
    if abs(sig.fs - fs) > 1e-9:
        raise ValueError("binary format needs an integer sample rate")
    with open(path, "wb") as fh:
        fh.write(_SIG_HEADER.pack(SIGNAL_MAGIC, fs, len(sig)))
        fh.write(np.asarray(sig.samples, dtype="<f8").tobytes())


def read_waveform_bin(path) -> SampledSignal:
    raw = Path(path).read_bytes()
    if len(raw) < _SIG_HEADER.size:
        raise ValueError("file too short for a PMUSIG01 header")
    magic, fs, count = _SIG_HEADER.unpack_from(raw)
    if magic != SIGNAL_MAGIC:
        raise ValueError("not a PMUSIG01 file")
    body = raw[_SIG_HEADER.size:]
    if len(body) != 8 * count:
        raise ValueError(f"expected {count} samples, found {len(body) / 8:g}")
    return SampledSignal(fs=float(fs), samples=np.frombuffer(body, dtype="<f8").astype(np.float64))


def read_frames_csv(path) -> FrameSeries:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != FRAME_CSV_COLUMNS:
            raise ValueError(f"unexpected frame CSV header {header}")
        rows = list(reader)
    cols = list(zip(*rows)) if rows else [()] * len(FRAME_FIELDS)
    out = {}
    for name, col in zip(FRAME_FIELDS, cols):
        dtype = np.int64 if name in ("n", "saturation_count") else np.float64
        out[name] = np.array([dtype(float(x)) if dtype is np.int64 else float(x) for x in col],
                             dtype=dtype)
    return FrameSeries(**out)
