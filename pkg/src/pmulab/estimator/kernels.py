"""Interleaved demodulate-and-filter kernels.

Window ``m`` covers samples ``m*D .. m*D + N`` and accumulates in slot
``m % S``.  Each incoming sample is demodulated once and multiplied into
every open window with the tap matching that window's age, so no sample
history is kept.  A window is emitted on its last sample and its slot reset.

Two implementations exist for each arithmetic:

* ``*_loop`` -- per-sample loops, compiled with numba when enabled;
* ``*_np``   -- block-vectorised numpy (loops over taps, vectorised over
  windows).

Every window sees the same products added in the same order in both, so
they agree bit for bit.  ``interleave_float``/``interleave_fixed`` are
bound to whichever is selected by :mod:`pmulab._accel`.
"""
from __future__ import annotations

import numpy as np

from .._accel import USE_NUMBA, njit

# per-window values: v_re, v_im, i_re, i_im
N_VALUES = 4


def max_emitted(n_samples: int, decimation: int) -> int:
    return n_samples // decimation + 2


# --- float ----------------------------------------------------------------

def interleave_float_loop(v, cur, k0, taps, lut, quarter, decimation, acc, out_m, out_vals):
    n_taps = taps.shape[0]
    order = n_taps - 1
    n_slots = acc.shape[1]
    size = lut.shape[0]
    n_out = 0
    for p in range(v.shape[0]):
        k = k0 + p
        c = lut[k % size]
        s = lut[(k + size - quarter) % size]
        d0 = v[p] * c
        d1 = -(v[p] * s)
        d2 = cur[p] * c
        d3 = -(cur[p] * s)
        m_hi = k // decimation
        m_lo = 0
        if k > order:
            m_lo = (k - order + decimation - 1) // decimation
        for m in range(m_lo, m_hi + 1):
            j = k - m * decimation
            w = taps[j]
            slot = m % n_slots
            acc[0, slot] += w * d0
            acc[1, slot] += w * d1
            acc[2, slot] += w * d2
            acc[3, slot] += w * d3
            if j == order:
                out_m[n_out] = m
                for q in range(N_VALUES):
                    out_vals[n_out, q] = acc[q, slot]
                    acc[q, slot] = 0.0
                n_out += 1
    return n_out


def _window_span(k0, n, order, decimation):
    first = 0 if k0 <= order else -(-(k0 - order) // decimation)
    last = (k0 + n - 1) // decimation
    return first, last


def interleave_float_np(v, cur, k0, taps, lut, quarter, decimation, acc, out_m, out_vals):
    n = v.shape[0]
    if n == 0:
        return 0
    order = taps.shape[0] - 1
    n_slots = acc.shape[1]
    size = lut.shape[0]
    k = k0 + np.arange(n)
    c = lut[k % size]
    s = lut[(k + size - quarter) % size]
    d = np.stack([v * c, -(v * s), cur * c, -(cur * s)])

    first, last = _window_span(k0, n, order, decimation)
    ms = np.arange(first, last + 1)
    starts = ms * decimation
    slots = ms % n_slots
    loc = np.where(starts < k0, acc[:, slots], 0.0)

    if n < decimation:
        for p in range(n):
            j = k[p] - starts
            live = (j >= 0) & (j <= order)
            loc[:, live] += taps[j[live]] * d[:, p:p + 1]
    else:
        for j in range(order + 1):
            kk = starts + j
            live = (kk >= k0) & (kk < k0 + n)
            if live.any():
                loc[:, live] += taps[j] * d[:, kk[live] - k0]
    return _emit(loc, ms, starts, slots, k0 + n, order, acc, out_m, out_vals, 0.0)


def _emit(loc, ms, starts, slots, k_end, order, acc, out_m, out_vals, zero):
    done = starts + order < k_end
    n_out = int(done.sum())
    out_m[:n_out] = ms[done]
    out_vals[:n_out] = loc[:, done].T
    acc[:, slots[done]] = zero
    acc[:, slots[~done]] = loc[:, ~done]
    return n_out


# --- fixed ----------------------------------------------------------------

def _rshift_loop(v, s, nearest):
    if s <= 0:
        return v << (-s)
    if nearest:
        half = 1 << (s - 1)
        if v >= 0:
            return (v + half) >> s
        return -((-v + half) >> s)
    if v >= 0:
        return v >> s
    return -((-v) >> s)


def interleave_fixed_loop(v, cur, k0, taps, lut, quarter, decimation, acc, out_m, out_vals,
                          demod_shift, product_shift, nearest, word_min, word_max,
                          acc_min, acc_max, sat):
    n_taps = taps.shape[0]
    order = n_taps - 1
    n_slots = acc.shape[1]
    size = lut.shape[0]
    n_out = 0
    d = np.empty(N_VALUES, dtype=np.int64)
    for p in range(v.shape[0]):
        k = k0 + p
        c = lut[k % size]
        s = lut[(k + size - quarter) % size]
        d[0] = _rshift(v[p] * c, demod_shift, nearest)
        d[1] = -_rshift(v[p] * s, demod_shift, nearest)
        d[2] = _rshift(cur[p] * c, demod_shift, nearest)
        d[3] = -_rshift(cur[p] * s, demod_shift, nearest)
        for q in range(N_VALUES):
            if d[q] > word_max:
                d[q] = word_max
                sat[0] += 1
            elif d[q] < word_min:
                d[q] = word_min
                sat[0] += 1
        m_hi = k // decimation
        m_lo = 0
        if k > order:
            m_lo = (k - order + decimation - 1) // decimation
        for m in range(m_lo, m_hi + 1):
            j = k - m * decimation
            w = taps[j]
            slot = m % n_slots
            for q in range(N_VALUES):
                a = acc[q, slot] + _rshift(w * d[q], product_shift, nearest)
                if a > acc_max:
                    a = acc_max
                    sat[0] += 1
                elif a < acc_min:
                    a = acc_min
                    sat[0] += 1
                acc[q, slot] = a
            if j == order:
                out_m[n_out] = m
                for q in range(N_VALUES):
                    out_vals[n_out, q] = acc[q, slot]
                    acc[q, slot] = 0
                n_out += 1
    return n_out


def _rshift_np(v, s, nearest):
    if s <= 0:
        return v << (-s)
    if nearest:
        half = 1 << (s - 1)
        return np.where(v >= 0, (v + half) >> s, -((-v + half) >> s))
    return np.where(v >= 0, v >> s, -((-v) >> s))


def _saturate_np(a, lo, hi, sat):
    over = (a > hi) | (a < lo)
    if over.any():
        sat[0] += int(over.sum())
        a = np.clip(a, lo, hi)
    return a


def interleave_fixed_np(v, cur, k0, taps, lut, quarter, decimation, acc, out_m, out_vals,
                        demod_shift, product_shift, nearest, word_min, word_max,
                        acc_min, acc_max, sat):
    n = v.shape[0]
    if n == 0:
        return 0
    order = taps.shape[0] - 1
    n_slots = acc.shape[1]
    size = lut.shape[0]
    k = k0 + np.arange(n)
    c = lut[k % size]
    s = lut[(k + size - quarter) % size]
    d = np.stack([
        _rshift_np(v * c, demod_shift, nearest),
        -_rshift_np(v * s, demod_shift, nearest),
        _rshift_np(cur * c, demod_shift, nearest),
        -_rshift_np(cur * s, demod_shift, nearest),
    ])
    # sample-major order of saturation counting does not matter for the total
    d = _saturate_np(d, word_min, word_max, sat)

    first, last = _window_span(k0, n, order, decimation)
    ms = np.arange(first, last + 1)
    starts = ms * decimation
    slots = ms % n_slots
    loc = np.where(starts < k0, acc[:, slots], 0)

    if n < decimation:
        for p in range(n):
            j = k[p] - starts
            live = np.flatnonzero((j >= 0) & (j <= order))
            prod = _rshift_np(taps[j[live]] * d[:, p:p + 1], product_shift, nearest)
            loc[:, live] = _saturate_np(loc[:, live] + prod, acc_min, acc_max, sat)
    else:
        for j in range(order + 1):
            kk = starts + j
            live = np.flatnonzero((kk >= k0) & (kk < k0 + n))
            if live.size:
                prod = _rshift_np(taps[j] * d[:, kk[live] - k0], product_shift, nearest)
                loc[:, live] = _saturate_np(loc[:, live] + prod, acc_min, acc_max, sat)
    return _emit(loc, ms, starts, slots, k0 + n, order, acc, out_m, out_vals, 0)


if USE_NUMBA:
    _rshift = njit(_rshift_loop)
    interleave_float = njit(interleave_float_loop)
    interleave_fixed = njit(interleave_fixed_loop)
else:
    _rshift = _rshift_loop
    interleave_float = interleave_float_np
    interleave_fixed = interleave_fixed_np
