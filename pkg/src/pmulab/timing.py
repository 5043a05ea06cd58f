"""Local-oscillator model and PPS discipline of the sample clock.

The sample clock is derived from a free-running 12-MHz oscillator.  Each
PPS edge restarts one second of sampling; the oscillator cycles counted
over the previous second tell how many cycles the next second really has,
and a schedule spreads them over the 3840 sample periods so the sampling
grid stays aligned to UTC without a jump at the next edge.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

NOMINAL_HZ = 12_000_000
MAX_PPM = 1000.0


@dataclass(frozen=True)
class ClockModel:
    nominal_hz: int = NOMINAL_HZ
    ppm_error: float = 0.0
    jitter_rms: float = 0.0  # seconds, per PPS edge
    seed: int = 0

    def __post_init__(self):
        if not abs(self.ppm_error) < MAX_PPM:
            raise ValueError("|ppm_error| must be below 1000")
        if self.jitter_rms < 0:
            raise ValueError("jitter_rms must be non-negative")

    @property
    def true_hz(self) -> float:
        return self.nominal_hz * (1.0 + self.ppm_error * 1e-6)

    def edge_offsets(self, n_edges: int) -> np.ndarray:
        """Timing error of PPS edges 0..n_edges-1 (seconds)."""
        if self.jitter_rms == 0:
            return np.zeros(n_edges)
        rng = np.random.default_rng(self.seed)
        return rng.normal(0.0, self.jitter_rms, size=n_edges)


def measure_pps_interval(clock: ClockModel, second: int = 0) -> int:
    """Oscillator cycles counted between PPS edges ``second`` and ``second+1``."""
    edges = clock.edge_offsets(second + 2)
    interval = 1.0 + edges[second + 1] - edges[second]
    return int(round(clock.true_hz * interval))


@dataclass(frozen=True)
class SkewSchedule:
    periods: np.ndarray  # oscillator cycles per sample period, one second's worth
    holdover: bool = False

    @property
    def total_cycles(self) -> int:
        return int(self.periods.sum())

    @property
    def offsets(self) -> np.ndarray:
        """Cycle count at each sample instant relative to the PPS edge."""
        return np.concatenate(([0], np.cumsum(self.periods)[:-1]))


def uniform_schedule(fs: int = 3840, nominal_hz: int = NOMINAL_HZ) -> SkewSchedule:
    """Uncorrected schedule: every period is the nominal cycle count."""
    if nominal_hz % fs:
        raise ValueError("nominal clock must divide evenly into fs periods")
    return SkewSchedule(np.full(fs, nominal_hz // fs, dtype=np.int64))


def build_schedule(measured_cycles: int, fs: int = 3840, nominal_hz: int = NOMINAL_HZ,
                   previous: SkewSchedule | None = None) -> SkewSchedule:
    """Spread ``measured_cycles`` over ``fs`` sample periods.

    Sample ``k`` is placed at cycle ``round(k * measured / fs)`` (Bresenham
    with rounding), so periods are floor or ceil of the mean and the
    placement error is at most half a cycle with zero mean.  A measurement
    outside +-1000 ppm is rejected: the previous schedule (or the uniform one)
    is returned with ``holdover`` set.
    """
    if abs(measured_cycles - nominal_hz) > nominal_hz * MAX_PPM * 1e-6:
        base = previous if previous is not None else uniform_schedule(fs, nominal_hz)
        return SkewSchedule(base.periods, holdover=True)
    k = np.arange(fs + 1, dtype=np.int64)
    marks = (2 * k * measured_cycles + fs) // (2 * fs)
    return SkewSchedule(np.diff(marks))


@dataclass
class SamplingTrace:
    """True sampling instants against the ideal UTC grid."""

    fs: int
    second: np.ndarray  # UTC second of each sample
    index: np.ndarray  # sample index within its second
    true_time: np.ndarray

    @property
    def ideal_time(self) -> np.ndarray:
        return self.second + self.index / self.fs

    @property
    def error(self) -> np.ndarray:
        return self.true_time - self.ideal_time

    def to_csv(self, path) -> None:
        err = self.error
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["second", "index", "true_time", "error_s"])
            for q in range(self.true_time.size):
                w.writerow([int(self.second[q]), int(self.index[q]),
                            repr(float(self.true_time[q])), repr(float(err[q]))])


def simulate_sampling(clock: ClockModel, schedule: SkewSchedule | None, seconds: int,
                      fs: int = 3840) -> SamplingTrace:
    """True sample instants over ``seconds`` PPS-triggered acquisitions.

    With ``schedule=None`` the discipline is active: each second uses a
    schedule built from the cycle count of the preceding PPS interval.
    Otherwise the given schedule is used unchanged every second (pass
    :func:`uniform_schedule` for the uncorrected clock).
    """
    if seconds < 1:
        raise ValueError("seconds must be >= 1")
    edges = clock.edge_offsets(seconds + 1)
    f_true = clock.true_hz
    times = []
    current = None
    for s in range(seconds):
        if schedule is None:
            # the count over the interval before this second was taken
            current = build_schedule(int(round(f_true)) if s == 0 else
                                     measure_pps_interval(clock, s - 1),
                                     fs, clock.nominal_hz, current)
            sched = current
        else:
            sched = schedule
        times.append(s + edges[s] + sched.offsets / f_true)
    idx = np.tile(np.arange(fs), seconds)
    sec = np.repeat(np.arange(seconds), fs)
    return SamplingTrace(fs, sec, idx, np.concatenate(times))


def sample_tone(trace: SamplingTrace, freq: float = 60.0, amplitude: float = 1.0,
                phase: float = 0.0) -> np.ndarray:
    """A steady tone evaluated at the traced (true) sampling instants."""
    return amplitude * np.cos(2.0 * math.pi * freq * trace.true_time + phase)


def max_abs_error(trace: SamplingTrace, second: int | None = None) -> float:
    err = trace.error
    if second is not None:
        err = err[trace.second == second]
    return float(np.max(np.abs(err)))
