"""Running test cases end to end: synthesize, estimate, score, judge."""
from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..estimator import Backend, Estimator, EstimatorConfig, FrameSeries
from ..metrics import (ErrorSeries, StepResponse, StepTrial, align_step_trials, error_series,
                       step_metrics)
from ..signalgen import AdcModel, SignalKind, TestSignalSpec, apply_adc, synthesize
from .suite import TestCase, evaluation_mask

# metrics judged for each class, in report order
STEADY_METRICS = ("tve", "fe", "rfe")
STEP_METRICS = ("overshoot", "delay", "response_tve", "response_fe", "response_rfe")
STEP_CONTEXT = 1.5  # s of frames kept on each side of a step


@dataclass(frozen=True)
class Impairments:
    """Signal-path impairments applied ahead of the estimator.

    Every waveform is driven to ``drive`` of ADC full scale at its peak.
    With ``enob`` set, both channels pass through an ``adc_bits`` converter
    whose noise is raised to the requested effective resolution; voltage and
    current get independent noise.
    """

    enob: float | None = None
    seed: int = 0
    drive: float = 0.9
    adc_bits: int = 16
    full_scale: float = 3.3

    def __post_init__(self):
        if not 0 < self.drive <= 1:
            raise ValueError("drive must lie in (0, 1]")
        if self.enob is not None:
            AdcModel(self.adc_bits, self.enob, self.full_scale)

    def to_dict(self) -> dict:
        return asdict(self)


def config_for(f0: float = 60.0, rate: float = 60.0, backend="float", **kw) -> EstimatorConfig:
    """Estimator configuration at 64 samples per nominal cycle."""
    return EstimatorConfig(f_nominal=f0, fs=64 * f0, reporting_rate=rate,
                           backend=Backend(backend), **kw)


@dataclass
class Verdict:
    test_id: str
    test_class: str
    measured: dict[str, float]
    limits: dict[str, float | None]
    status: dict[str, str]  # metric -> "pass" | "fail" | "n/a"
    saturation: int = 0
    clipped: int = 0
    extra: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s != "fail" for s in self.status.values())

    @property
    def failed_metrics(self) -> list[str]:
        return [m for m, s in self.status.items() if s == "fail"]


def evaluate(case: TestCase, measured: dict[str, float], saturation: int = 0, clipped: int = 0,
             extra: dict | None = None) -> Verdict:
    """Compare measured maxima with the case limits.

    A metric with no limit is not applicable; an undefined measurement
    (NaN) against a limit fails.
    """
    names = STEP_METRICS if case.test_class == "step" else STEADY_METRICS
    limits, status = {}, {}
    for m in names:
        lim = case.limits.get(f"{m}_max")
        limits[m] = lim
        value = measured.get(m, math.nan)
        if lim is None:
            status[m] = "n/a"
        elif not math.isfinite(value):
            status[m] = "fail"
        else:
            status[m] = "pass" if value <= lim else "fail"
    return Verdict(case.id, case.test_class, dict(measured), limits, status,
                   int(saturation), int(clipped), dict(extra or {}))


def _seed(base: int, case_id: str, index: int, channel: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([base, zlib.crc32(case_id.encode()), index, channel])


def run_waveform(spec: TestSignalSpec, config: EstimatorConfig,
                 impairments: Impairments = Impairments(), seed_key: tuple = ("", 0)):
    """One acquisition: returns (frames in per-unit, ground truth, ADC clip count)."""
    sig, truth = synthesize(spec, fs=config.fs, t0=config.t0)
    drive = impairments.drive / spec.peak()
    x = sig.samples * drive
    v = i = x
    clipped = 0
    if impairments.enob is not None:
        adc = AdcModel(impairments.adc_bits, impairments.enob, impairments.full_scale)
        half = impairments.full_scale / 2
        scaled = sig.with_samples(x * half)
        chans = []
        for ch in (0, 1):
            seed = _seed(impairments.seed, seed_key[0], seed_key[1], ch)
            out = apply_adc(scaled, adc, seed)
            clipped += out.clipped
            chans.append(out.samples / half)
        v, i = chans
    frames = Estimator(config).run(v, i).scaled(1.0 / drive)
    return frames, truth, clipped


def _frames_saturation(frames: FrameSeries) -> int:
    return int(frames.saturation_count[-1]) if len(frames) else 0


def _run_steady(case, config, imp):
    parts, sat, clip = [], 0, 0
    best = {m: -math.inf for m in STEADY_METRICS}
    for q, spec in enumerate(case.specs):
        frames, truth, c = run_waveform(spec, config, imp, (case.id, q))
        es = error_series(frames, truth)
        excl = 0.0
        if case.test_class == "frequency_ramp":
            excl = (case.limits.get("exclusion") or 0.0) / spec.reporting_rate
        sel = evaluation_mask(case, es.timestamp, excl)
        win = ErrorSeries(es.timestamp[sel], es.tve[sel], es.fe[sel], es.rfe[sel])
        for m, v in win.maxima().items():
            best[m] = float(np.maximum(best[m], v))  # NaN propagates
        parts.append(win)
        sat += _frames_saturation(frames)
        clip += c
    series = ErrorSeries(*(np.concatenate([getattr(p, f) for p in parts])
                           for f in ("timestamp", "tve", "fe", "rfe")))
    return series, evaluate(case, best, sat, clip)


def _step_quantity(spec: TestSignalSpec, frames: FrameSeries) -> tuple[str, np.ndarray]:
    if spec.kind is SignalKind.MAGNITUDE_STEP:
        return "magnitude", frames.v_mag / (spec.amplitude / math.sqrt(2.0))
    phase = np.unwrap(frames.v_phase)
    # keep the pre-step level near phase0 rather than an arbitrary 2*pi branch
    return "phase", phase - 2 * math.pi * np.round((phase[0] - spec.phase0) / (2 * math.pi))


def _run_step(case, config, imp):
    trials, sat, clip = [], 0, 0
    quantity = "magnitude"
    for q, spec in enumerate(case.specs):
        frames, truth, c = run_waveform(spec, config, imp, (case.id, q))
        es = error_series(frames, truth)
        t_rel = frames.timestamp - spec.step_instant
        quantity, values = _step_quantity(spec, frames)
        keep = np.abs(t_rel) <= STEP_CONTEXT
        trials.append(StepTrial(t_rel[keep], {quantity: values[keep], "tve": es.tve[keep],
                                              "fe": es.fe[keep], "rfe": es.rfe[keep]}))
        sat += _frames_saturation(frames)
        clip += c
    merged = align_step_trials(trials, [s.step_stagger for s in case.specs],
                               case.spec.reporting_rate)
    steady = {m: case.limits.get(f"steady_{m}_max") for m in ("tve", "fe", "rfe")}
    sm = step_metrics(merged, steady, case.spec.step_size, quantity, window=case.window)
    measured = {"overshoot": sm.overshoot, "delay": sm.delay_time,
                **{f"response_{m}": sm.response_time.get(m, math.nan) for m in steady}}
    extra = {"undershoot": sm.undershoot, "pre_value": sm.pre_value, "post_value": sm.post_value}
    return merged, evaluate(case, measured, sat, clip, extra)


def run_test(case: TestCase, config: EstimatorConfig,
             impairments: Impairments | None = None) -> tuple[ErrorSeries | StepResponse, Verdict]:
    imp = impairments or Impairments()
    if case.test_class == "step":
        return _run_step(case, config, imp)
    return _run_steady(case, config, imp)


def _verdict_only(args) -> Verdict:
    case, config, imp = args
    return run_test(case, config, imp)[1]


def run_suite(cases, config: EstimatorConfig, impairments: Impairments | None = None,
              jobs: int = 1, progress=None) -> list[Verdict]:
    """Run ``cases``; verdicts come back in enumeration order."""
    imp = impairments or Impairments()
    cases = list(cases)
    work = [(c, config, imp) for c in cases]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = []
            for v in pool.map(_verdict_only, work, chunksize=4):
                out.append(v)
                if progress:
                    progress(v)
            return out
    out = []
    for w in work:
        v = _verdict_only(w)
        out.append(v)
        if progress:
            progress(v)
    return out
