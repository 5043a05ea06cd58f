"""Streaming M-class phasor estimator.

Samples enter one at a time (or in blocks); every ``decimation`` samples a
filter window completes.  Its complex value is scaled by 2/sqrt(2) (undo the
mixing loss, convert peak to RMS), converted to polar form, and the voltage
phase feeds the centred frequency/ROCOF differences.  Because the centred
difference for window ``n`` needs window ``n+1``, frame ``n`` is released
when window ``n+1`` completes.  Frame 0 has no centred estimate (its
frequency and ROCOF are NaN), so it is released as soon as window 0
completes, at sample ``filter_order``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .config import (Backend, EstimatorConfig, FilterCoefficients, FixedPointFormat,
                     QuadratureLut, Rounding, design_filter)
from .cordic import ANGLE_FRAC, cordic_polar, cordic_polar_int, wrap_phase
from .frequency import frequency_rocof_series, unwrap_sequence

SQRT2 = math.sqrt(2.0)
PHASE_HISTORY = 5  # completed windows kept per channel


@dataclass(frozen=True)
class PhasorFrame:
    n: int
    timestamp: float
    v_mag: float
    v_phase: float
    i_mag: float
    i_phase: float
    frequency: float
    rocof: float
    saturation_count: int = 0

    @property
    def v_phasor(self) -> complex:
        return self.v_mag * complex(math.cos(self.v_phase), math.sin(self.v_phase))

    @property
    def i_phasor(self) -> complex:
        return self.i_mag * complex(math.cos(self.i_phase), math.sin(self.i_phase))


FRAME_FIELDS = tuple(f.name for f in fields(PhasorFrame))


@dataclass
class FrameSeries:
    """Column-oriented batch of frames."""

    n: np.ndarray
    timestamp: np.ndarray
    v_mag: np.ndarray
    v_phase: np.ndarray
    i_mag: np.ndarray
    i_phase: np.ndarray
    frequency: np.ndarray
    rocof: np.ndarray
    saturation_count: np.ndarray

    @classmethod
    def empty(cls) -> "FrameSeries":
        return cls(**{name: np.empty(0, dtype=np.int64 if name in ("n", "saturation_count")
                                     else np.float64) for name in FRAME_FIELDS})

    @classmethod
    def concat(cls, parts) -> "FrameSeries":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(**{name: np.concatenate([getattr(p, name) for p in parts])
                      for name in FRAME_FIELDS})

    def __len__(self) -> int:
        return self.n.size

    def __getitem__(self, idx) -> "FrameSeries | PhasorFrame":
        if isinstance(idx, (int, np.integer)):
            return PhasorFrame(**{name: getattr(self, name)[idx].item() for name in FRAME_FIELDS})
        return FrameSeries(**{name: getattr(self, name)[idx] for name in FRAME_FIELDS})

    def __iter__(self):
        for q in range(len(self)):
            yield self[q]

    @property
    def v_phasor(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.v_phase)

    @property
    def i_phasor(self) -> np.ndarray:
        return self.i_mag * np.exp(1j * self.i_phase)

    def scaled(self, factor: float) -> "FrameSeries":
        """Copy with both magnitudes multiplied by ``factor``."""
        out = self[:]
        out.v_mag = self.v_mag * factor
        out.i_mag = self.i_mag * factor
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "timestamp", "v_mag", "v_phase", "i_mag", "i_phase",
                        "freq", "rocof", "saturation_count"])
            for q in range(len(self)):
                w.writerow([int(self.n[q])] + [repr(float(getattr(self, name)[q]))
                                                for name in FRAME_FIELDS[1:-1]]
                           + [int(self.saturation_count[q])])


@dataclass
class EstimatorState:
    """Mutable streaming state (single owner)."""

    k: int = 0
    acc: np.ndarray = field(default_factory=lambda: np.zeros((4, 0)))
    saturation: np.ndarray = field(default_factory=lambda: np.zeros(1, dtype=np.int64))
    # recent completed windows: (m, v_mag, v_phase_unwrapped, i_mag, i_phase, sat)
    history: list = field(default_factory=list)
    windows_completed: int = 0
    next_release: int = 0  # index of the next frame to hand out


class Estimator:
    """Two-channel (voltage, current) phasor/frequency/ROCOF estimator."""

    def __init__(self, config: EstimatorConfig | None = None,
                 coefficients: FilterCoefficients | None = None):
        self.config = config or EstimatorConfig()
        self.coefficients = coefficients or design_filter(self.config)
        self.lut = QuadratureLut.build(self.config)
        self.fixed = self.config.backend is Backend.FIXED
        if self.fixed:
            self.fmt = FixedPointFormat.for_taps(self.coefficients.taps)
            self._taps = self.fmt.quantize_taps(self.coefficients.taps)
            self._lut = self.fmt.quantize_lut(self.lut.table)
        else:
            self.fmt = None
            self._taps = np.ascontiguousarray(self.coefficients.taps, dtype=np.float64)
            self._lut = np.ascontiguousarray(self.lut.table, dtype=np.float64)
        self.reset()

    # state ------------------------------------------------------------------

    def reset(self) -> None:
        dtype = np.int64 if self.fixed else np.float64
        self.state = EstimatorState(acc=np.zeros((kernels.N_VALUES, self.config.n_slots), dtype=dtype))

    @property
    def saturation_count(self) -> int:
        return int(self.state.saturation[0])

    # filtering --------------------------------------------------------------

    def filter_block(self, v, i) -> tuple[np.ndarray, np.ndarray]:
        """Advance the filter bank; return completed window ids and values.

        Values are ``(n, 4)``: v_re, v_im, i_re, i_im of the raw filter output
        (float backend: real units; fixed backend: accumulator integers).
        """
        cfg = self.config
        st = self.state
        n = len(v)
        out_m = np.empty(kernels.max_emitted(n, cfg.decimation), dtype=np.int64)
        if self.fixed:
            vq, v_clip = self.fmt.to_word_counted(v)
            iq, i_clip = self.fmt.to_word_counted(i)
            st.saturation[0] += v_clip + i_clip
            out_vals = np.empty((out_m.size, kernels.N_VALUES), dtype=np.int64)
            fmt = self.fmt
            n_out = kernels.interleave_fixed(
                vq, iq, st.k, self._taps, self._lut, self.lut.quarter, cfg.decimation,
                st.acc, out_m, out_vals, fmt.frac_bits, fmt.product_shift,
                cfg.rounding is Rounding.NEAREST, fmt.word_min, fmt.word_max,
                fmt.acc_min, fmt.acc_max, st.saturation)
        else:
            out_vals = np.empty((out_m.size, kernels.N_VALUES), dtype=np.float64)
            n_out = kernels.interleave_float(
                np.ascontiguousarray(v, dtype=np.float64), np.ascontiguousarray(i, dtype=np.float64),
                st.k, self._taps, self._lut, self.lut.quarter, cfg.decimation,
                st.acc, out_m, out_vals)
        st.k += n
        st.windows_completed += n_out
        return out_m[:n_out], out_vals[:n_out]

    def _to_polar(self, vals: np.ndarray):
        cfg = self.config
        if self.fixed:
            nearest = cfg.rounding is Rounding.NEAREST
            scale = 1.0 / (1 << 14)
            vm, vp, _ = cordic_polar_int(vals[:, 0], vals[:, 1], cfg.cordic_iterations,
                                         self.fmt.acc_frac, SQRT2, nearest)
            im, ip, _ = cordic_polar_int(vals[:, 2], vals[:, 3], cfg.cordic_iterations,
                                         self.fmt.acc_frac, SQRT2, nearest)
            a = 1.0 / (1 << ANGLE_FRAC)
            return vm * scale, vp * a, im * scale, ip * a
        v = (vals[:, 0] + 1j * vals[:, 1]) * SQRT2
        i = (vals[:, 2] + 1j * vals[:, 3]) * SQRT2
        if cfg.polar == "cordic":
            pv = cordic_polar(v.real, v.imag, cfg.cordic_iterations)
            pi = cordic_polar(i.real, i.imag, cfg.cordic_iterations)
            return pv.magnitude, pv.phase, pi.magnitude, pi.phase
        return np.abs(v), np.angle(v), np.abs(i), np.angle(i)

    # frames -----------------------------------------------------------------

    def process_block(self, v, i=None) -> FrameSeries:
        """Feed a block of samples; return the frames released by it."""
        v = np.asarray(v, dtype=np.float64)
        i = v if i is None else np.asarray(i, dtype=np.float64)
        if v.shape != i.shape or v.ndim != 1:
            raise ValueError("v and i must be 1-D arrays of equal length")
        ms, vals = self.filter_block(v, i)
        if not ms.size:
            return FrameSeries.empty()
        vm, vp, im, ip = self._to_polar(vals)
        st = self.state
        sat_now = self.saturation_count

        hist = st.history
        start = hist[-1][2] if hist else None
        vpu = unwrap_sequence(vp, start)
        new = [(int(m), vm[q], vpu[q], im[q], ip[q], sat_now) for q, m in enumerate(ms)]
        rows = hist + new
        st.history = rows[-PHASE_HISTORY:]

        m_first = rows[0][0]
        first = st.next_release - m_first
        # the newest window only provides the forward difference, except window 0
        last = len(rows) - 1 if rows[-1][0] == 0 else len(rows) - 2
        if last < first:
            return FrameSeries.empty()
        st.next_release = rows[last][0] + 1
        m_all = np.array([r[0] for r in rows])
        phase_all = np.array([r[2] for r in rows])
        f, r = frequency_rocof_series(phase_all, self.config.reporting_interval,
                                      self.config.f_nominal)
        # a window without its predecessor (window 0) has no centred estimate
        contiguous = np.r_[False, np.diff(m_all) == 1]
        f[~contiguous] = np.nan
        r[~contiguous] = np.nan

        sel = slice(first, last + 1)
        n = m_all[sel]
        return FrameSeries(
            n=n,
            timestamp=self.config.frame_time(n).astype(np.float64),
            v_mag=np.array([r_[1] for r_ in rows[sel]], dtype=np.float64),
            v_phase=wrap_phase(phase_all[sel]),
            i_mag=np.array([r_[3] for r_ in rows[sel]], dtype=np.float64),
            i_phase=wrap_phase(np.array([r_[4] for r_ in rows[sel]], dtype=np.float64)),
            frequency=f[sel],
            rocof=r[sel],
            saturation_count=np.array([r_[5] for r_ in rows[sel]], dtype=np.int64),
        )

    def process_sample(self, v_raw: float, i_raw: float) -> PhasorFrame | None:
        """Feed one sample pair; return a frame when one is released."""
        frames = self.process_block(np.array([v_raw], dtype=np.float64),
                                    np.array([i_raw], dtype=np.float64))
        return frames[0] if len(frames) else None

    def run(self, v, i=None, block: int = 1 << 16) -> FrameSeries:
        """Reset, then process whole records in blocks."""
        self.reset()
        v = np.asarray(v, dtype=np.float64)
        i = v if i is None else np.asarray(i, dtype=np.float64)
        parts = [self.process_block(v[s:s + block], i[s:s + block])
                 for s in range(0, v.size, block)]
        return FrameSeries.concat(parts)


def estimate(v, i=None, config: EstimatorConfig | None = None) -> FrameSeries:
    return Estimator(config).run(v, i)


__all__ = ["Estimator", "EstimatorState", "FrameSeries", "PhasorFrame", "estimate"]
