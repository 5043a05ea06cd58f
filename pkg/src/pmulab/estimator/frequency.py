"""Frequency and ROCOF from the reported phase sequence."""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def unwrap_phase(prev: float, current_wrapped: float) -> float:
    """Return ``current_wrapped + 2*pi*m`` closest to ``prev``."""
    m = round((prev - current_wrapped) / TWO_PI)
    return current_wrapped + TWO_PI * m


def frequency_rocof(phase_history, reporting_interval: float,
                    f_nominal: float = 60.0) -> tuple[float, float] | None:
    """Centred finite differences over the last three phases.

    ``phase_history`` holds wrapped or unwrapped phases, oldest first; the
    estimate refers to the middle one of the last three.  Returns ``None``
    when fewer than three phases are available.
    """
    if len(phase_history) < 3:
        return None
    p0, p1, p2 = (float(p) for p in list(phase_history)[-3:])
    p1 = unwrap_phase(p0, p1)
    p2 = unwrap_phase(p1, p2)
    dt = reporting_interval
    f = f_nominal + (p2 - p0) / (2.0 * TWO_PI * dt)
    rocof = (p2 - 2.0 * p1 + p0) / (TWO_PI * dt * dt)
    return f, rocof


def unwrap_sequence(phases: np.ndarray, start: float | None = None) -> np.ndarray:
    """Sequential unwrap matching repeated :func:`unwrap_phase` calls."""
    phases = np.asarray(phases, dtype=np.float64)
    out = np.empty_like(phases)
    if not phases.size:
        return out
    prev = phases[0] if start is None else unwrap_phase(start, phases[0])
    out[0] = prev
    for n in range(1, phases.size):
        prev = unwrap_phase(prev, phases[n])
        out[n] = prev
    return out


def frequency_rocof_series(unwrapped: np.ndarray, reporting_interval: float,
                           f_nominal: float = 60.0) -> tuple[np.ndarray, np.ndarray]:
    """Vector form: entry ``n`` uses phases ``n-1, n, n+1``; ends are NaN."""
    p = np.asarray(unwrapped, dtype=np.float64)
    f = np.full(p.shape, np.nan)
    r = np.full(p.shape, np.nan)
    if p.size >= 3:
        dt = reporting_interval
        f[1:-1] = f_nominal + (p[2:] - p[:-2]) / (2.0 * TWO_PI * dt)
        r[1:-1] = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / (TWO_PI * dt * dt)
    return f, r
