"""Independent reference implementations shared by the tests."""
import math

import numpy as np


def naive_windows(v, cur, taps, lut, decimation=64):
    """Each window as an explicit dot product over all its stored samples."""
    size = len(lut)
    quarter = size // 4
    order = len(taps) - 1
    out = []
    m = 0
    while m * decimation + order < len(v):
        acc = [0.0, 0.0, 0.0, 0.0]
        for j in range(order + 1):
            k = m * decimation + j
            c = lut[k % size]
            s = lut[(k - quarter) % size]
            w = taps[j]
            acc[0] += w * (v[k] * c)
            acc[1] += w * -(v[k] * s)
            acc[2] += w * (cur[k] * c)
            acc[3] += w * -(cur[k] * s)
        out.append(acc)
        m += 1
    return np.array(out)


def python_lut():
    table = [math.cos(2 * math.pi * q / 64) for q in range(64)]
    table[0], table[16], table[32], table[48] = 1.0, 0.0, -1.0, 0.0
    return table
