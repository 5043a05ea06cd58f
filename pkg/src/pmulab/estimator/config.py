"""Estimator parameters, FIR design and the quadrature oscillator table."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Backend(enum.Enum):
    FLOAT = "float"
    FIXED = "fixed"


class Rounding(enum.Enum):
    TRUNCATE = "truncate"  # round toward zero
    NEAREST = "nearest"  # round half away from zero


WINDOWS = ("hamming", "hann", "blackman", "rectangular")


@dataclass(frozen=True)
class EstimatorConfig:
    """Static configuration of the M-class estimator.

    ``polar`` selects the rectangular-to-polar stage of the float backend:
    ``"exact"`` (hypot/atan2) or ``"cordic"``.  The fixed backend always uses
    its integer CORDIC.
    """

    f_nominal: float = 60.0
    fs: float = 3840.0
    reporting_rate: float = 60.0
    filter_order: int = 760
    f_reference: float = 7.54
    cordic_iterations: int = 16
    backend: Backend = Backend.FLOAT
    window: str = "hamming"
    rounding: Rounding = Rounding.TRUNCATE
    polar: str = "exact"
    t0: float = 0.0

    def __post_init__(self):
        if not isinstance(self.backend, Backend):
            object.__setattr__(self, "backend", Backend(self.backend))
        if not isinstance(self.rounding, Rounding):
            object.__setattr__(self, "rounding", Rounding(self.rounding))
        for name in ("f_nominal", "fs", "reporting_rate", "f_reference"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
        if not _is_int(self.fs / self.reporting_rate):
            raise ValueError("fs must be an integer multiple of reporting_rate")
        if not _is_int(self.fs / self.f_nominal):
            raise ValueError("fs must hold an integer number of samples per nominal cycle")
        if self.samples_per_cycle % 4:
            raise ValueError("samples per nominal cycle must be divisible by 4")
        if self.filter_order <= 0 or self.filter_order % 2:
            raise ValueError("filter_order must be a positive even integer")
        if self.f_reference >= self.reporting_rate / 2:
            raise ValueError("f_reference must be below half the reporting rate")
        if not 1 <= self.cordic_iterations <= 30:
            raise ValueError("cordic_iterations must be in 1..30")
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}")
        if self.polar not in ("exact", "cordic"):
            raise ValueError("polar must be 'exact' or 'cordic'")

    @property
    def decimation(self) -> int:
        return int(round(self.fs / self.reporting_rate))

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.fs / self.f_nominal))

    @property
    def n_taps(self) -> int:
        return self.filter_order + 1

    @property
    def n_slots(self) -> int:
        """Number of overlapping windows open at once."""
        return -(-self.n_taps // self.decimation)

    @property
    def reporting_interval(self) -> float:
        return 1.0 / self.reporting_rate

    def frame_time(self, n):
        """Window-centre timestamp of frame ``n``."""
        return self.t0 + (self.filter_order / 2 + np.asarray(n) * self.decimation) / self.fs


def _is_int(x: float) -> bool:
    return abs(x - round(x)) < 1e-9 and round(x) >= 1


@dataclass(frozen=True)
class FilterCoefficients:
    taps: np.ndarray
    dc_gain: float  # sum of the un-normalised taps

    @property
    def order(self) -> int:
        return self.taps.size - 1

    def response(self, f, fs: float):
        """Complex frequency response at ``f`` Hz (zero phase at window centre)."""
        f = np.atleast_1d(np.asarray(f, dtype=np.float64))
        k = np.arange(self.taps.size) - self.order / 2
        return np.exp(-2j * np.pi * np.outer(f, k) / fs) @ self.taps


def _window(name: str, n: int) -> np.ndarray:
    if name == "hamming":
        return np.hamming(n)
    if name == "hann":
        return np.hanning(n)
    if name == "blackman":
        return np.blackman(n)
    return np.ones(n)


def design_filter(config: EstimatorConfig) -> FilterCoefficients:
    """Windowed-sinc low-pass of the M-class reference algorithm.

    W(k) = sinc(2*pi*2*Ffr*k/Fs) * h(k) for k = -N/2..N/2, with h the
    selected window (Hamming by default), normalised to unity DC gain.
    """
    n = config.filter_order
    if n % 2:
        raise ValueError("filter order must be even")
    if config.f_reference >= config.reporting_rate / 2:
        raise ValueError("reference frequency must be below half the reporting rate")
    k = np.arange(-n // 2, n // 2 + 1)
    raw = np.sinc(2.0 * 2.0 * config.f_reference * k / config.fs) * _window(config.window, n + 1)
    # enforce exact symmetry against rounding in the window functions
    raw = 0.5 * (raw + raw[::-1])
    dc = float(raw.sum())
    return FilterCoefficients(taps=raw / dc, dc_gain=dc)


@dataclass(frozen=True)
class QuadratureLut:
    """One nominal cycle of cosine; sine is read a quarter cycle earlier."""

    table: np.ndarray

    @classmethod
    def build(cls, config: EstimatorConfig) -> "QuadratureLut":
        size = config.samples_per_cycle
        table = np.cos(2.0 * np.pi * np.arange(size) / size)
        # exact zeros/ones at the quadrant points
        q = size // 4
        table[0], table[q], table[2 * q], table[3 * q] = 1.0, 0.0, -1.0, 0.0
        return cls(table)

    @property
    def size(self) -> int:
        return self.table.size

    @property
    def quarter(self) -> int:
        return self.table.size // 4

    def cos(self, k):
        return self.table[np.asarray(k) % self.size]

    def sin(self, k):
        # sin(theta) = cos(theta - pi/2)
        return self.table[(np.asarray(k) - self.quarter) % self.size]


def demodulate(sample: float, k: int, lut: QuadratureLut) -> complex:
    """Mix one sample down by the nominal frequency: x * (cos - j sin)."""
    if k < 0:
        raise ValueError("sample index must be non-negative")
    c = lut.table[k % lut.size]
    s = lut.table[(k - lut.quarter) % lut.size]
    return complex(sample * c, -(sample * s))


@dataclass(frozen=True)
class FixedPointFormat:
    """Word lengths of the integer datapath.

    Samples, LUT entries, demodulated values and taps are 16-bit
    two's-complement (Q1.15; taps carry an extra power-of-two scale
    ``tap_exponent`` so their largest value uses the full word).  Products are
    16x16 -> 32 bit and are shifted down by ``product_shift`` before entering
    the 32-bit saturating accumulators, which hold ``acc_frac`` fraction bits.
    """

    word_bits: int = 16
    acc_bits: int = 32
    frac_bits: int = 15
    tap_exponent: int = 0
    acc_frac: int = 28

    @property
    def word_max(self) -> int:
        return (1 << (self.word_bits - 1)) - 1

    @property
    def word_min(self) -> int:
        return -(1 << (self.word_bits - 1))

    @property
    def acc_max(self) -> int:
        return (1 << (self.acc_bits - 1)) - 1

    @property
    def acc_min(self) -> int:
        return -(1 << (self.acc_bits - 1))

    @property
    def product_shift(self) -> int:
        return 2 * self.frac_bits + self.tap_exponent - self.acc_frac

    def to_word(self, x) -> np.ndarray:
        """Round real values onto Q1.15 codes with saturation."""
        q = np.round(np.asarray(x, dtype=np.float64) * (1 << self.frac_bits))
        return np.clip(q, self.word_min, self.word_max).astype(np.int64)

    def to_word_counted(self, x) -> tuple[np.ndarray, int]:
        """Like :meth:`to_word`, also returning how many values saturated."""
        q = np.round(np.asarray(x, dtype=np.float64) * (1 << self.frac_bits))
        n_sat = int(np.count_nonzero((q > self.word_max) | (q < self.word_min)))
        return np.clip(q, self.word_min, self.word_max).astype(np.int64), n_sat

    @classmethod
    def for_taps(cls, taps: np.ndarray) -> "FixedPointFormat":
        peak = float(np.max(np.abs(taps)))
        exponent = max(0, int(math.floor(math.log2(1.0 / peak))))
        return cls(tap_exponent=exponent)

    def quantize_taps(self, taps: np.ndarray) -> np.ndarray:
        scaled = np.round(taps * (1 << (self.frac_bits + self.tap_exponent)))
        if np.any(np.abs(scaled) > self.word_max):
            raise ValueError("taps overflow the 16-bit coefficient word")
        return scaled.astype(np.int64)

    def quantize_lut(self, table: np.ndarray) -> np.ndarray:
        return self.to_word(table)
