"""Command-line entry point: ``pmulab run | list-tests | explain | decode | synth``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict

from .. import __version__, backend_name
from ..recorder import decode_stream, dequantize
from .limits import load_limits
from .report import build_report, write_csv, write_json
from .runner import Impairments, config_for, run_suite
from .suite import enumerate_tests, select, suite_counts


def _suite(args):
    return enumerate_tests(args.f0, args.rate, load_limits(args.limits))


def _print_counts(counts, out=None):
    out = out or sys.stdout
    for cls, n in counts.per_class.items():
        print(f"  {cls:<22} {n:>4} tests  {counts.waveforms_per_class[cls]:>4} waveforms", file=out)
    print(f"  {'total':<22} {counts.total:>4} tests  {counts.total_waveforms:>4} waveforms",
          file=out)
    print(f"  {counts.flag()}", file=out)


def cmd_run(args) -> int:
    limits = load_limits(args.limits)
    cases = enumerate_tests(args.f0, args.rate, limits)
    if args.tests:
        cases = select(cases, args.tests.split(","))
        if not cases:
            print(f"no tests match {args.tests!r}", file=sys.stderr)
            return 2
    config = config_for(args.f0, args.rate, args.backend, rounding=args.rounding)
    imp = Impairments(enob=args.enob, seed=args.seed, drive=args.drive)
    counts = suite_counts(cases)
    print(f"running {counts.total} tests ({counts.total_waveforms} waveforms), "
          f"backend={args.backend}, kernels={backend_name()}", file=sys.stderr)
    _print_counts(counts, sys.stderr)

    def progress(v):
        if not args.quiet:
            mark = "ok  " if v.passed else "FAIL"
            detail = "" if v.passed else "  " + ",".join(v.failed_metrics)
            print(f"{mark} {v.test_id}{detail}", file=sys.stderr)

    t0 = time.perf_counter()
    verdicts = run_suite(cases, config, imp, jobs=args.jobs, progress=progress)
    elapsed = time.perf_counter() - t0
    echo = {"f0": args.f0, "rate": args.rate, "backend": args.backend, "rounding": args.rounding,
            "tests": args.tests, "impairments": imp.to_dict(), "version": __version__,
            "estimator": {k: (v.value if hasattr(v, "value") else v)
                          for k, v in asdict(config).items()}}
    doc = build_report(verdicts, counts, echo, limits)
    if args.out:
        write_json(doc, args.out)
    if args.csv:
        write_csv(verdicts, args.csv)
    s = doc["summary"]
    print(f"{s['passed']}/{s['run']} passed in {elapsed:.1f} s; overall {doc['overall']}",
          file=sys.stderr)
    for tid in s["failing_ids"]:
        print(f"  failed: {tid}", file=sys.stderr)
    return 0 if doc["overall"] == "pass" else 1


def cmd_list(args) -> int:
    cases = _suite(args)
    if args.tests:
        cases = select(cases, args.tests.split(","))
    for c in cases:
        print(f"{c.id:<16} {c.test_class:<22} {c.description}")
    print()
    _print_counts(suite_counts(cases))
    return 0


def cmd_explain(args) -> int:
    matches = [c for c in _suite(args) if c.id == args.test_id]
    if not matches:
        print(f"unknown test id {args.test_id!r}", file=sys.stderr)
        return 2
    c = matches[0]
    spec = asdict(c.spec)
    spec["kind"] = c.spec.kind.value
    doc = {"id": c.id, "class": c.test_class, "description": c.description,
           "waveforms": c.n_waveforms, "evaluation_window_s": list(c.window),
           "limits": c.limits, "signal": spec}
    if c.n_waveforms > 1:
        varying = sorted({k for s in c.specs for k, v in asdict(s).items()
                          if v != asdict(c.spec)[k]})
        doc["varies"] = {k: [getattr(s, k) for s in c.specs] for k in varying}
    print(json.dumps(doc, indent=2, default=str))
    return 0


def cmd_decode(args) -> int:
    with open(args.input, "rb") as fh:
        records = decode_stream(fh.read())
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["utc_second", "index", "timestamp", "v_mag", "v_phase", "i_mag", "i_phase"])
        for r in records:
            f = dequantize(r.frame, args.mag_full_scale)
            w.writerow([r.utc_second, r.index, repr(r.utc_second + r.index / args.rate),
                        repr(f.v_mag), repr(f.v_phase), repr(f.i_mag), repr(f.i_phase)])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_synth(args) -> int:
    from ..io import write_waveform_bin, write_waveform_csv
    from ..signalgen import synthesize
    matches = [c for c in _suite(args) if c.id == args.test_id]
    if not matches:
        print(f"unknown test id {args.test_id!r}", file=sys.stderr)
        return 2
    spec = matches[0].specs[args.index]
    sig, _ = synthesize(spec, fs=64 * args.f0)
    if args.out.endswith(".csv"):
        write_waveform_csv(sig, args.out)
    else:
        write_waveform_bin(sig, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmulab", description="M-class PMU estimator and test lab")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def suite_args(sp):
        sp.add_argument("--f0", type=float, default=60.0, help="nominal frequency (50 or 60)")
        sp.add_argument("--rate", type=float, default=60.0, help="reporting rate, frames/s")
        sp.add_argument("--limits", help="JSON limit overrides")

    r = sub.add_parser("run", help="run the compliance suite")
    suite_args(r)
    r.add_argument("--backend", choices=("float", "fixed"), default="float")
    r.add_argument("--rounding", choices=("truncate", "nearest"), default="truncate")
    r.add_argument("--enob", type=float, default=None, help="ADC effective bits (default: ideal)")
    r.add_argument("--drive", type=float, default=0.9, help="peak drive as fraction of full scale")
    r.add_argument("--tests", default=None, help="comma-separated id globs, e.g. 'ss-*,step-*'")
    r.add_argument("--out", default=None, help="JSON report path")
    r.add_argument("--csv", default=None, help="CSV summary path")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    ls = sub.add_parser("list-tests", help="list enumerated tests and class counts")
    suite_args(ls)
    ls.add_argument("--tests", default=None)
    ls.set_defaults(func=cmd_list)

    ex = sub.add_parser("explain", help="show a test's waveform and limits")
    suite_args(ex)
    ex.add_argument("test_id")
    ex.set_defaults(func=cmd_explain)

    de = sub.add_parser("decode", help="convert a recorder byte stream to CSV")
    de.add_argument("input")
    de.add_argument("--out", default=None)
    de.add_argument("--mag-full-scale", type=float, default=2.0)
    de.add_argument("--rate", type=float, default=60.0)
    de.set_defaults(func=cmd_decode)

    sy = sub.add_parser("synth", help="export a test waveform (.csv or PMUSIG01 .bin)")
    suite_args(sy)
    sy.add_argument("test_id")
    sy.add_argument("--index", type=int, default=0, help="waveform index within the test")
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"pmulab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
