"""Enumeration of the M-class test suite."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..signalgen import SignalKind, TestSignalSpec
from .limits import LimitTable, default_limits

PUBLISHED_TOTAL = 523
SUPPORTED_RATES = {50.0: (50.0,), 60.0: (60.0,)}
N_STAGGERS = 20

LEAD_IN = 2.0
STEADY_SPAN = 5.0
STEP_SPAN = 0.5
RAMP_SPAN = 10.0

CLASS_ORDER = ("steady_state", "harmonic", "amplitude_modulation", "phase_modulation",
               "frequency_ramp", "out_of_band", "step")

_METRIC_KEYS = {"tve_max", "fe_max", "rfe_max", "overshoot_max", "delay_max",
                "response_tve_max", "response_fe_max", "response_rfe_max"}


@dataclass(frozen=True)
class TestCase:
    """One enumerated test.

    ``specs`` holds every waveform the test needs: one for most classes,
    the fundamental sweep for out-of-band tests and the 20 staggered
    trials for step tests.
    """

    __test__ = False

    id: str
    test_class: str
    specs: tuple[TestSignalSpec, ...]
    limits: dict = field(compare=False)
    window: tuple[float, float]
    description: str = ""

    def __post_init__(self):
        if not any(self.limits.get(k) is not None for k in _METRIC_KEYS):
            raise ValueError(f"{self.id}: at least one limit is required")
        if not self.specs:
            raise ValueError(f"{self.id}: no waveforms")

    @property
    def spec(self) -> TestSignalSpec:
        return self.specs[0]

    @property
    def n_waveforms(self) -> int:
        return len(self.specs)


def _fmt(x: float) -> str:
    return f"{x:.1f}"


def _frange(lo: float, hi: float, step: float) -> list[float]:
    n = int(round((hi - lo) / step))
    return [round(lo + q * step, 6) for q in range(n + 1)]


def oob_interferers(f0: float, rate: float) -> list[float]:
    """Interfering frequencies: 5-Hz steps below the band, 2-Hz steps above.

    For 60 Hz this gives 10..30 Hz and 90..120 Hz (21 frequencies); the
    bands are f0 -/+ rate/2 clipped at 10 Hz and 2*f0.
    """
    low_top = f0 - rate / 2
    high_bottom = f0 + rate / 2
    low = _frange(10.0, low_top, 5.0) if low_top >= 10.0 else []
    high = _frange(high_bottom, 2 * f0, 2.0)
    return low + high


def oob_fundamentals(f0: float) -> list[float]:
    return _frange(f0 - 3.0, f0 + 3.0, 1.0)


def _limits(table: LimitTable, cls: str) -> dict:
    return {k: v.value for k, v in table[cls].items()}


def enumerate_tests(f0: float = 60.0, rate: float = 60.0,
                    limits: LimitTable | None = None) -> list[TestCase]:
    f0, rate = float(f0), float(rate)
    if f0 not in SUPPORTED_RATES:
        raise ValueError("f0 must be 50 or 60 Hz")
    if rate not in SUPPORTED_RATES[f0]:
        raise ValueError(f"unsupported reporting rate {rate:g} for f0={f0:g} "
                         f"(supported: {', '.join(f'{r:g}' for r in SUPPORTED_RATES[f0])})")
    table = limits or default_limits()
    base = TestSignalSpec(f0=f0, f1=f0, reporting_rate=rate, lead_in=LEAD_IN,
                          duration=LEAD_IN + STEADY_SPAN + 0.25)
    steady_win = (LEAD_IN, LEAD_IN + STEADY_SPAN)
    out: list[TestCase] = []

    lim = _limits(table, "steady_state")
    for f in _frange(f0 - 5.0, f0 + 5.0, 0.1):
        out.append(TestCase(f"ss-{_fmt(f)}", "steady_state",
                            (replace(base, f1=f),), lim, steady_win,
                            f"steady state at {f:.1f} Hz"))

    lim = _limits(table, "harmonic")
    for h in range(2, 51):
        out.append(TestCase(f"harm-{h:02d}", "harmonic",
                            (replace(base, kind=SignalKind.HARMONIC, harmonic_order=h,
                                     interference_level=0.1),), lim, steady_win,
                            f"10 % harmonic of order {h}"))

    for cls, kind, tag, field_ in (
            ("amplitude_modulation", SignalKind.AMPLITUDE_MODULATION, "am", "kx"),
            ("phase_modulation", SignalKind.PHASE_MODULATION, "pm", "ka")):
        lim = _limits(table, cls)
        for fm in _frange(0.1, 5.0, 0.1):
            spec = replace(base, kind=kind, fm=fm, **{field_: 0.1})
            out.append(TestCase(f"{tag}-{_fmt(fm)}", cls, (spec,), lim, steady_win,
                                f"{tag.upper()} at {fm:.1f} Hz, depth 0.1"))

    lim = _limits(table, "frequency_ramp")
    ramp = replace(base, kind=SignalKind.FREQUENCY_RAMP, duration=LEAD_IN + RAMP_SPAN + 0.5)
    for name, lo, hi, r in (("ramp-up", f0 - 5, f0 + 5, 1.0), ("ramp-down", f0 + 5, f0 - 5, -1.0)):
        out.append(TestCase(name, "frequency_ramp",
                            (replace(ramp, ramp_start=lo, ramp_end=hi, ramp_rate=r),),
                            lim, (LEAD_IN, LEAD_IN + RAMP_SPAN),
                            f"ramp {lo:g} -> {hi:g} Hz at {r:+g} Hz/s"))

    lim = _limits(table, "out_of_band")
    for fi in oob_interferers(f0, rate):
        specs = tuple(replace(base, kind=SignalKind.OUT_OF_BAND, f1=fund, interference_freq=fi,
                              interference_level=0.1) for fund in oob_fundamentals(f0))
        out.append(TestCase(f"oob-{_fmt(fi)}", "out_of_band", specs, lim, steady_win,
                            f"10 % interferer at {fi:g} Hz, fundamentals "
                            f"{oob_fundamentals(f0)[0]:g}..{oob_fundamentals(f0)[-1]:g} Hz"))

    # response time counts frames beyond the steady-state limits
    lim = _limits(table, "step") | {f"steady_{k}": v for k, v in
                                     _limits(table, "steady_state").items()}
    step_base = replace(base, duration=5.0, step_time=3.5)
    for name, kind, size in (("step-mag-pos", SignalKind.MAGNITUDE_STEP, 0.1),
                             ("step-mag-neg", SignalKind.MAGNITUDE_STEP, -0.1),
                             ("step-phase-pos", SignalKind.PHASE_STEP, math.pi / 18),
                             ("step-phase-neg", SignalKind.PHASE_STEP, -math.pi / 18)):
        specs = tuple(replace(step_base, kind=kind, step_size=size, step_stagger=k / N_STAGGERS)
                      for k in range(N_STAGGERS))
        out.append(TestCase(name, "step", specs, lim, (-STEP_SPAN / 2, STEP_SPAN / 2),
                            f"{'magnitude' if kind is SignalKind.MAGNITUDE_STEP else 'phase'} "
                            f"step of {size:+.4g}, {N_STAGGERS} staggered trials"))
    return out


@dataclass(frozen=True)
class SuiteCounts:
    per_class: dict[str, int]
    waveforms_per_class: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.per_class.values())

    @property
    def total_waveforms(self) -> int:
        return sum(self.waveforms_per_class.values())

    @property
    def matches_published(self) -> bool:
        return self.total == PUBLISHED_TOTAL

    def flag(self) -> str:
        if self.matches_published:
            return f"total {self.total} matches the published {PUBLISHED_TOTAL}"
        return (f"DEVIATION: {self.total} tests ({self.total_waveforms} waveform runs) "
                f"vs published {PUBLISHED_TOTAL}; the published composition is not broken down")

    def to_dict(self) -> dict:
        return {"per_class": dict(self.per_class), "waveforms_per_class": dict(self.waveforms_per_class),
                "total": self.total, "total_waveforms": self.total_waveforms,
                "published_total": PUBLISHED_TOTAL, "matches_published": self.matches_published,
                "flag": self.flag()}


def suite_counts(cases) -> SuiteCounts:
    per = {c: 0 for c in CLASS_ORDER}
    wav = {c: 0 for c in CLASS_ORDER}
    for case in cases:
        per[case.test_class] += 1
        wav[case.test_class] += case.n_waveforms
    return SuiteCounts(per, wav)


def select(cases, patterns) -> list[TestCase]:
    """Cases whose id matches any of the shell-style ``patterns``."""
    from fnmatch import fnmatchcase
    if isinstance(patterns, str):
        patterns = [patterns]
    return [c for c in cases if any(fnmatchcase(c.id, p) for p in patterns)]


def evaluation_mask(case: TestCase, t: np.ndarray, exclusion: float = 0.0) -> np.ndarray:
    lo, hi = case.window
    sel = (t >= lo) & (t <= hi)
    if case.test_class == "frequency_ramp" and exclusion > 0:
        spec = case.spec
        for edge in (spec.ramp_begin, spec.ramp_begin + spec.ramp_duration):
            sel &= np.abs(t - edge) > exclusion
    return sel
