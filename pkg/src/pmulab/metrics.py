"""TVE / FE / RFE scoring and step-response analysis."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

N_TRIALS = 20


def tve(estimate, truth):
    """Total vector error in percent.

    Works elementwise on complex scalars or arrays.  A zero truth phasor has
    no defined TVE and raises ``ValueError``.
    """
    est = np.asarray(estimate, dtype=np.complex128)
    ref = np.asarray(truth, dtype=np.complex128)
    den = ref.real ** 2 + ref.imag ** 2
    if np.any(den == 0):
        raise ValueError("TVE is undefined for a zero truth phasor")
    num = (est.real - ref.real) ** 2 + (est.imag - ref.imag) ** 2
    out = 100.0 * np.sqrt(num / den)
    return float(out) if out.ndim == 0 else out


def fe(f_est, f_true):
    out = np.abs(np.asarray(f_est, dtype=np.float64) - f_true)
    return float(out) if out.ndim == 0 else out


def rfe(r_est, r_true):
    out = np.abs(np.asarray(r_est, dtype=np.float64) - r_true)
    return float(out) if out.ndim == 0 else out


def setup_tve(gain_error: float, timing_error: float = 0.0, f0: float = 60.0) -> float:
    """TVE of a signal source with a pure gain error and a timing offset."""
    truth = 1.0 + 0j
    est = (1.0 + gain_error) * complex(math.cos(2 * math.pi * f0 * timing_error),
                                       math.sin(2 * math.pi * f0 * timing_error))
    return tve(est, truth)


@dataclass
class ErrorSeries:
    timestamp: np.ndarray
    tve: np.ndarray
    fe: np.ndarray
    rfe: np.ndarray

    def maxima(self) -> dict[str, float]:
        def top(a):
            a = a[np.isfinite(a)]
            return float(a.max()) if a.size else math.nan
        return {"tve": top(self.tve), "fe": top(self.fe), "rfe": top(self.rfe)}

    def window(self, t_start: float, t_end: float) -> "ErrorSeries":
        sel = (self.timestamp >= t_start) & (self.timestamp <= t_end)
        return ErrorSeries(self.timestamp[sel], self.tve[sel], self.fe[sel], self.rfe[sel])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "tve_pct", "fe_hz", "rfe_hzps"])
            for row in zip(self.timestamp, self.tve, self.fe, self.rfe):
                w.writerow([repr(float(v)) for v in row])


def error_series(frames, truth, channel: str = "both") -> ErrorSeries:
    """Score a :class:`FrameSeries` against a :class:`GroundTruth`.

    ``channel="both"`` reports the larger TVE of voltage and current (both
    channels are driven with the same waveform in the compliance tests).
    """
    t = frames.timestamp
    x = truth.phasor(t)
    if channel == "v":
        e = tve(frames.v_phasor, x)
    elif channel == "i":
        e = tve(frames.i_phasor, x)
    else:
        e = np.maximum(tve(frames.v_phasor, x), tve(frames.i_phasor, x))
    return ErrorSeries(t, np.atleast_1d(e), fe(frames.frequency, truth.frequency(t)),
                       rfe(frames.rocof, truth.rocof(t)))


# --- step response --------------------------------------------------------

@dataclass
class StepTrial:
    """One staggered trial: times relative to its own step instant."""

    t_rel: np.ndarray
    values: dict[str, np.ndarray]


@dataclass
class StepResponse:
    t: np.ndarray
    values: dict[str, np.ndarray]
    trials: int = N_TRIALS
    spacing: float = 0.0
    overshoot: float = math.nan
    undershoot: float = math.nan
    delay_time: float = math.nan
    response_time: dict[str, float] = field(default_factory=dict)


def align_step_trials(trials, staggers, reporting_rate: float = 60.0) -> StepResponse:
    """Interleave 20 staggered trials into one high-resolution response.

    Each trial's frame times are already relative to its own step, so
    merging is a sort on relative time; the merged grid spacing is one
    twentieth of the reporting interval.
    """
    trials = list(trials)
    staggers = [float(s) for s in staggers]
    if len(trials) != N_TRIALS or len(staggers) != N_TRIALS:
        raise ValueError(f"exactly {N_TRIALS} trials are required")
    expected = set(range(N_TRIALS))
    got = {int(round(s * N_TRIALS)) for s in staggers}
    if got != expected or any(abs(s * N_TRIALS - round(s * N_TRIALS)) > 1e-9 for s in staggers):
        raise ValueError("staggers must be exactly {0, 1, ..., 19}/20 with no duplicates")
    keys = set(trials[0].values)
    if any(set(tr.values) != keys for tr in trials):
        raise ValueError("all trials must carry the same series")

    t = np.concatenate([tr.t_rel for tr in trials])
    order = np.argsort(t, kind="stable")
    merged = {k: np.concatenate([tr.values[k] for tr in trials])[order] for k in keys}
    return StepResponse(t=t[order], values=merged,
                        spacing=1.0 / (reporting_rate * N_TRIALS))


def _mean_between(t, x, lo, hi):
    sel = (t >= lo) & (t <= hi) & np.isfinite(x)
    if not sel.any():
        raise ValueError(f"no samples in [{lo}, {hi}] for the steady-state reference")
    return float(np.mean(x[sel]))


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    undershoot: float
    delay_time: float
    response_time: dict[str, float]
    pre_value: float
    post_value: float


def step_metrics(merged: StepResponse, steady_limits: dict[str, float], step_size: float,
                 quantity: str = "magnitude", settle: float = 0.2,
                 reference_span: float = 1.0,
                 window: tuple[float, float] | None = None) -> StepMetrics:
    """Overshoot, 50 % delay time and per-metric response times.

    Steady-state levels are averaged over ``reference_span`` seconds on each
    side of the step, excluding ``settle`` seconds next to it.  Response time
    for metric ``m`` runs from its first to its last sample above
    ``steady_limits[m]``.  A response that never crosses 50 % yields
    ``delay_time = nan``.  ``window`` (relative to the step) limits the
    search for overshoot, the crossing and exceedances; the steady-state
    references are always taken from the full response.
    """
    t = merged.t
    x = merged.values[quantity]
    pre = _mean_between(t, x, -settle - reference_span, -settle)
    post = _mean_between(t, x, settle, settle + reference_span)
    if step_size == 0:
        raise ValueError("step_size must be non-zero")
    sign = 1.0 if post >= pre else -1.0
    span = abs(step_size)

    inside = np.ones(t.size, dtype=bool) if window is None else \
        (t >= window[0]) & (t <= window[1])
    finite = np.isfinite(x) & inside
    if not finite.any():
        raise ValueError("no samples inside the evaluation window")
    beyond = sign * (x[finite] - post)
    below = sign * (pre - x[finite])
    overshoot = max(0.0, float(beyond.max())) / span
    undershoot = max(0.0, float(below.max())) / span

    half = 0.5 * (pre + post)
    rel = sign * (x - half)
    delay = math.nan
    idx = np.flatnonzero((rel[:-1] < 0) & (rel[1:] >= 0) & inside[:-1] & inside[1:])
    if idx.size:
        q = idx[0]
        t50 = t[q] + (t[q + 1] - t[q]) * (-rel[q]) / (rel[q + 1] - rel[q])
        delay = abs(float(t50))

    response = {}
    for name, limit in steady_limits.items():
        if limit is None or name not in merged.values:
            continue
        e = merged.values[name]
        over = np.flatnonzero(np.isfinite(e) & (e > limit) & inside)
        response[name] = float(t[over[-1]] - t[over[0]]) if over.size else 0.0

    merged.overshoot, merged.undershoot, merged.delay_time = overshoot, undershoot, delay
    merged.response_time = dict(response)
    return StepMetrics(overshoot, undershoot, delay, response, pre, post)


# --- PPS boundary continuity ------------------------------------------------

def pps_boundary_ratio(timestamps, phases, boundaries, guard: float) -> float:
    """Largest phase step near PPS edges relative to the largest elsewhere.

    Inter-frame phase steps are detrended by their median (which removes
    any constant off-nominal rotation).  Steps whose frames lie within
    ``guard`` seconds of a boundary count as boundary steps.
    """
    t = np.asarray(timestamps, dtype=np.float64)
    p = np.unwrap(np.asarray(phases, dtype=np.float64))
    dphi = np.diff(p)
    dphi = np.abs(dphi - np.median(dphi))
    tmid = 0.5 * (t[1:] + t[:-1])
    near = np.zeros(tmid.size, dtype=bool)
    for b in boundaries:
        near |= np.abs(tmid - b) <= guard
    if not near.any() or near.all():
        raise ValueError("need both boundary and interior frames")
    interior = float(dphi[~near].max())
    if interior == 0.0:
        return math.inf if dphi[near].max() > 0 else 1.0
    return float(dphi[near].max()) / interior
