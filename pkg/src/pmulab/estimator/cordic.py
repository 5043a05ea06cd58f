"""Vectoring-mode CORDIC, in floating point and in integer arithmetic.

Both variants fold the left half-plane onto the right half-plane with a
pre-rotation by pi, then run ``iterations`` shift-and-add micro-rotations
that drive y to zero.  The float variant "shifts" with ``ldexp`` so every
step is exact up to the add; the integer variant uses arithmetic shifts.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

ANGLE_FRAC = 28  # fraction bits of the integer angle accumulator


class PolarResult(NamedTuple):
    magnitude: float | np.ndarray
    phase: float | np.ndarray
    degenerate: bool | np.ndarray


def cordic_gain(iterations: int) -> float:
    """Aggregate magnitude growth K of ``iterations`` micro-rotations."""
    return math.prod(math.sqrt(1.0 + 4.0 ** -i) for i in range(iterations))


def atan_table(iterations: int) -> np.ndarray:
    return np.arctan(np.ldexp(1.0, -np.arange(iterations)))


def wrap_phase(phi):
    """Wrap to [-pi, pi)."""
    return (np.asarray(phi) + np.pi) % (2.0 * np.pi) - np.pi


def cordic_polar(re, im, iterations: int = 16) -> PolarResult:
    """Array form of :func:`cordic_to_polar`."""
    x = np.array(re, dtype=np.float64, copy=True, ndmin=1)
    y = np.array(im, dtype=np.float64, copy=True, ndmin=1)
    x, y = np.broadcast_arrays(x, y)
    x, y = x.copy(), y.copy()
    degenerate = (x == 0.0) & (y == 0.0)

    z = np.zeros_like(x)
    left = x < 0.0
    z[left] = np.where(y[left] >= 0.0, np.pi, -np.pi)
    x[left] = -x[left]
    y[left] = -y[left]

    angles = atan_table(iterations)
    for i in range(iterations):
        up = y < 0.0
        dx = np.ldexp(y, -i)
        dy = np.ldexp(x, -i)
        # rotate counter-clockwise when y < 0, clockwise otherwise
        x, y = np.where(up, x - dx, x + dx), np.where(up, y + dy, y - dy)
        z = np.where(up, z - angles[i], z + angles[i])

    mag = x * (1.0 / cordic_gain(iterations))
    phase = wrap_phase(z)
    mag[degenerate] = 0.0
    phase[degenerate] = 0.0
    if np.ndim(re) == 0 and np.ndim(im) == 0:
        return PolarResult(float(mag[0]), float(phase[0]), bool(degenerate[0]))
    return PolarResult(mag, phase, degenerate)


def cordic_to_polar(re: float, im: float, iterations: int = 16) -> PolarResult:
    """Magnitude and phase of ``re + j*im`` using shift-and-add steps only.

    The only multiply is the final 1/K gain correction.  ``(0, 0)`` returns
    magnitude 0 and phase 0 with ``degenerate`` set.
    """
    return cordic_polar(float(re), float(im), iterations)


def _shift(v: np.ndarray, s: int, nearest: bool) -> np.ndarray:
    if s <= 0:
        return v << -s
    if nearest:
        half = 1 << (s - 1)
        return np.where(v >= 0, (v + half) >> s, -((-v + half) >> s))
    return np.where(v >= 0, v >> s, -((-v) >> s))


def cordic_polar_int(x, y, iterations: int = 16, in_frac: int = 28,
                     out_scale: float = 1.0, nearest: bool = False):
    """Integer vectoring CORDIC on fixed-point rectangular inputs.

    ``x``/``y`` carry ``in_frac`` fraction bits.  The magnitude is reduced to
    a 16-bit Q1.14 word and multiplied once by the 16-bit constant
    ``out_scale / K`` (Q1.15), giving a Q1.14 result.  Returns
    ``(mag_q14, phase_q28, degenerate)`` as int64 arrays.
    """
    x = np.array(x, dtype=np.int64, ndmin=1)
    y = np.array(y, dtype=np.int64, ndmin=1)
    degenerate = (x == 0) & (y == 0)
    pi_q = int(round(math.pi * (1 << ANGLE_FRAC)))
    angles = np.round(atan_table(iterations) * (1 << ANGLE_FRAC)).astype(np.int64)

    z = np.zeros_like(x)
    left = x < 0
    z[left] = np.where(y[left] >= 0, pi_q, -pi_q)
    x = np.where(left, -x, x)
    y = np.where(left, -y, y)
    for i in range(iterations):
        up = y < 0
        dx = y >> i
        dy = x >> i
        x, y = np.where(up, x - dx, x + dx), np.where(up, y + dy, y - dy)
        z = np.where(up, z - angles[i], z + angles[i])

    # wrap into [-pi, pi)
    z = np.where(z >= pi_q, z - 2 * pi_q, z)
    z = np.where(z < -pi_q, z + 2 * pi_q, z)

    mag16 = np.clip(_shift(x, in_frac - 14, nearest), -(1 << 15), (1 << 15) - 1)
    gain_q15 = int(round(out_scale / cordic_gain(iterations) * (1 << 15)))
    if gain_q15 > (1 << 15) - 1:
        raise ValueError("CORDIC gain constant does not fit a 16-bit word")
    mag = np.clip(_shift(mag16 * gain_q15, 15, nearest), 0, (1 << 15) - 1)
    mag[degenerate] = 0
    z[degenerate] = 0
    return mag, z, degenerate
