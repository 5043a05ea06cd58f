"""Compare the numba and pure-numpy estimator kernels.

Each backend runs in its own interpreter because the kernel choice is made
at import time from ``PMULAB_DISABLE_NUMBA``.

    python3 benchmarks/bench_kernels.py [--seconds 60] [--repeat 3]
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def measure(seconds: float, repeat: int) -> dict:
    import numpy as np

    from pmulab import backend_name
    from pmulab.compliance import Impairments, config_for, enumerate_tests, run_suite, select
    from pmulab.estimator import Estimator, EstimatorConfig

    fs = 3840
    t = np.arange(int(seconds * fs)) / fs
    x = 0.9 * np.cos(2 * np.pi * 59.3 * t)
    out = {"kernels": backend_name(), "samples": x.size}
    for backend in ("float", "fixed"):
        est = Estimator(EstimatorConfig(backend=backend))
        est.run(x[:4 * fs])  # warm-up (and JIT compile)
        best = min(_timed(lambda: est.run(x)) for _ in range(repeat))
        out[f"{backend}_s"] = best
        out[f"{backend}_msps"] = x.size / best / 1e6
        out[f"{backend}_realtime"] = seconds / best
    cases = select(enumerate_tests(), "ss-*")
    out["ss_suite_s"] = _timed(lambda: run_suite(cases, config_for(), Impairments()))
    return out


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seconds", type=float, default=60.0, help="signal length per run")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args()
    if args.child:
        print(json.dumps(measure(args.seconds, args.repeat)))
        return 0

    rows = []
    for disable in ("0", "1"):
        env = dict(os.environ, PMULAB_DISABLE_NUMBA=disable)
        res = subprocess.run([sys.executable, __file__, "--child", "--seconds", str(args.seconds),
                              "--repeat", str(args.repeat)],
                             env=env, capture_output=True, text=True, check=True)
        rows.append(json.loads(res.stdout.strip().splitlines()[-1]))

    print(f"{args.seconds:g} s of 3840-Hz input ({rows[0]['samples']} samples), best of "
          f"{args.repeat}")
    print(f"{'kernels':<8} {'float s':>9} {'x realtime':>11} {'fixed s':>9} {'x realtime':>11} "
          f"{'ss suite s':>11}")
    for r in rows:
        print(f"{r['kernels']:<8} {r['float_s']:>9.3f} {r['float_realtime']:>11.0f} "
              f"{r['fixed_s']:>9.3f} {r['fixed_realtime']:>11.0f} {r['ss_suite_s']:>11.2f}")
    fast, slow = rows
    print(f"speed-up: float {slow['float_s'] / fast['float_s']:.1f}x, "
          f"fixed {slow['fixed_s'] / fast['fixed_s']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
