"""Test-waveform synthesis with analytic ground truth.

Every waveform is written as

    x(t) = a(t) * cos(2*pi*f0*t + psi(t)) + interference(t)

where ``a`` is the peak envelope and ``psi`` the phase relative to a
nominal-frequency cosine anchored at ``t = 0`` (the UTC second boundary).
The ground-truth phasor is ``a(t)/sqrt(2) * exp(j*psi(t))`` (RMS
convention), its frequency ``f0 + psi'(t)/(2*pi)`` and ROCOF the derivative
of that.  Samples and truth are evaluated from the same closed forms.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import signal as sps

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi

EPSILON_0 = 8.8541878128e-12  # F/m


class SignalKind(enum.Enum):
    STEADY_STATE = "SteadyState"
    HARMONIC = "Harmonic"
    AMPLITUDE_MODULATION = "AmplitudeModulation"
    PHASE_MODULATION = "PhaseModulation"
    FREQUENCY_RAMP = "FrequencyRamp"
    OUT_OF_BAND = "OutOfBand"
    MAGNITUDE_STEP = "MagnitudeStep"
    PHASE_STEP = "PhaseStep"


@dataclass(frozen=True)
class TestSignalSpec:
    """Parameters of one standard test waveform.

    ``amplitude`` is the per-unit *peak* value.  Ramps hold ``ramp_start``
    until ``ramp_time`` (defaults to ``lead_in``), sweep at ``ramp_rate``
    until ``ramp_end`` is reached and then hold.  Steps switch at
    ``step_time + step_stagger / reporting_rate``.
    """

    __test__ = False  # not a pytest class

    kind: SignalKind = SignalKind.STEADY_STATE
    f0: float = 60.0
    f1: float = 60.0
    amplitude: float = 1.0
    phase0: float = 0.0
    harmonic_order: int = 2
    interference_level: float = 0.1
    interference_freq: float = 10.0
    fm: float = 1.0
    kx: float = 0.1
    ka: float = 0.1
    ramp_rate: float = 1.0
    ramp_start: float = 55.0
    ramp_end: float = 65.0
    ramp_time: float | None = None
    step_size: float = 0.1
    step_time: float = 3.5
    step_stagger: float = 0.0
    duration: float = 7.25
    lead_in: float = 2.0
    reporting_rate: float = 60.0

    def __post_init__(self):
        for name in ("f0", "f1", "amplitude", "phase0", "interference_level", "interference_freq",
                     "fm", "kx", "ka", "ramp_rate", "ramp_start", "ramp_end", "step_size",
                     "step_time", "step_stagger", "duration", "lead_in", "reporting_rate"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.ramp_time is not None and not math.isfinite(self.ramp_time):
            raise ValueError("ramp_time must be finite")
        if not isinstance(self.kind, SignalKind):
            object.__setattr__(self, "kind", SignalKind(self.kind))
        if not self.duration > self.lead_in >= 0:
            raise ValueError("need duration > lead_in >= 0")
        if self.f1 <= 0 or self.f0 <= 0:
            raise ValueError("frequencies must be positive")
        if self.amplitude <= 0:
            raise ValueError("amplitude must be positive")
        if self.kind is SignalKind.HARMONIC and not 2 <= self.harmonic_order <= 50:
            raise ValueError("harmonic_order must be in 2..50")
        if not 0.0 <= self.step_stagger < 1.0:
            raise ValueError("step_stagger must lie in [0, 1)")
        if self.kind is SignalKind.FREQUENCY_RAMP:
            if self.ramp_rate == 0 or (self.ramp_end - self.ramp_start) * self.ramp_rate <= 0:
                raise ValueError("ramp_rate must move ramp_start towards ramp_end")
        if self.kind is SignalKind.MAGNITUDE_STEP and self.step_size <= -1.0:
            raise ValueError("magnitude step would drive the amplitude to zero")

    @property
    def step_instant(self) -> float:
        return self.step_time + self.step_stagger / self.reporting_rate

    @property
    def ramp_begin(self) -> float:
        return self.lead_in if self.ramp_time is None else self.ramp_time

    @property
    def ramp_duration(self) -> float:
        return (self.ramp_end - self.ramp_start) / self.ramp_rate

    def peak(self) -> float:
        """Largest possible |x(t)| in per-unit."""
        a = self.amplitude
        k = self.kind
        if k in (SignalKind.HARMONIC, SignalKind.OUT_OF_BAND):
            return a * (1.0 + abs(self.interference_level))
        if k is SignalKind.AMPLITUDE_MODULATION:
            return a * (1.0 + abs(self.kx))
        if k is SignalKind.MAGNITUDE_STEP:
            return a * max(1.0, 1.0 + self.step_size)
        return a


@dataclass
class SampledSignal:
    fs: float
    samples: np.ndarray
    t0: float = 0.0
    clipped: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    def with_samples(self, samples: np.ndarray, **changes) -> "SampledSignal":
        return replace(self, samples=np.asarray(samples, dtype=np.float64), **changes)


@dataclass(frozen=True)
class GroundTruth:
    """Closed-form phasor, frequency and ROCOF trajectory of a test signal.

    All methods accept scalars or arrays of absolute time (seconds since the
    UTC-aligned start ``t0``).
    """

    spec: TestSignalSpec
    t0: float = 0.0

    # envelope and phase relative to nominal rotation ------------------------

    def envelope(self, t):
        s = self.spec
        t = np.asarray(t, dtype=np.float64) - self.t0
        a = np.full_like(t, s.amplitude)
        if s.kind is SignalKind.AMPLITUDE_MODULATION:
            a = s.amplitude * (1.0 + s.kx * np.cos(TWO_PI * s.fm * t))
        elif s.kind is SignalKind.MAGNITUDE_STEP:
            a = np.where(t >= s.step_instant, s.amplitude * (1.0 + s.step_size), a)
        return a

    def phase(self, t):
        s = self.spec
        t = np.asarray(t, dtype=np.float64) - self.t0
        k = s.kind
        if k is SignalKind.AMPLITUDE_MODULATION:
            return np.full_like(t, s.phase0)
        if k is SignalKind.PHASE_MODULATION:
            return s.phase0 + s.ka * np.cos(TWO_PI * s.fm * t)
        if k is SignalKind.FREQUENCY_RAMP:
            return s.phase0 + TWO_PI * (self._ramp_cycles(t) - s.f0 * t)
        if k is SignalKind.PHASE_STEP:
            base = s.phase0 + TWO_PI * (s.f1 - s.f0) * t
            return np.where(t >= s.step_instant, base + s.step_size, base)
        # steady state, harmonic, out-of-band, magnitude step
        return s.phase0 + TWO_PI * (s.f1 - s.f0) * t

    def _ramp_cycles(self, t):
        """Integral of the instantaneous frequency from 0 to t (cycles)."""
        s = self.spec
        tb, td = s.ramp_begin, s.ramp_duration
        tau = np.clip(t - tb, 0.0, td)
        cycles = s.ramp_start * t + 0.5 * s.ramp_rate * tau * tau
        after = t > tb + td
        # after the ramp the frequency holds at ramp_end
        return np.where(after, cycles + (s.ramp_end - s.ramp_start) * (t - tb - td), cycles)

    # public trajectory -----------------------------------------------------

    def phasor(self, t):
        """Complex RMS phasor X(t)."""
        return self.envelope(t) / SQRT2 * np.exp(1j * self.phase(t))

    def frequency(self, t):
        s = self.spec
        t = np.asarray(t, dtype=np.float64) - self.t0
        k = s.kind
        if k is SignalKind.AMPLITUDE_MODULATION:
            return np.full_like(t, s.f0)
        if k is SignalKind.PHASE_MODULATION:
            return s.f0 - s.ka * s.fm * np.sin(TWO_PI * s.fm * t)
        if k is SignalKind.FREQUENCY_RAMP:
            tau = np.clip(t - s.ramp_begin, 0.0, s.ramp_duration)
            return s.ramp_start + s.ramp_rate * tau
        return np.full_like(t, s.f1)

    def rocof(self, t):
        s = self.spec
        t = np.asarray(t, dtype=np.float64) - self.t0
        k = s.kind
        if k is SignalKind.PHASE_MODULATION:
            return -TWO_PI * s.ka * s.fm * s.fm * np.cos(TWO_PI * s.fm * t)
        if k is SignalKind.FREQUENCY_RAMP:
            tau = t - s.ramp_begin
            inside = (tau >= 0.0) & (tau <= s.ramp_duration)
            return np.where(inside, s.ramp_rate, 0.0)
        return np.zeros_like(t)

    def waveform(self, t):
        """Instantaneous value x(t), interference included."""
        s = self.spec
        tt = np.asarray(t, dtype=np.float64) - self.t0
        x = self.envelope(t) * np.cos(TWO_PI * s.f0 * tt + self.phase(t))
        if s.kind is SignalKind.HARMONIC:
            x = x + s.interference_level * s.amplitude * np.cos(
                TWO_PI * s.harmonic_order * s.f1 * tt)
        elif s.kind is SignalKind.OUT_OF_BAND:
            x = x + s.interference_level * s.amplitude * np.cos(TWO_PI * s.interference_freq * tt)
        return x


def synthesize(spec: TestSignalSpec, fs: float = 3840.0,
               t0: float = 0.0) -> tuple[SampledSignal, GroundTruth]:
    """Sample ``spec`` at ``fs`` and return it with its ground truth."""
    if not (math.isfinite(fs) and fs > 0):
        raise ValueError("fs must be positive and finite")
    ratio = fs / spec.reporting_rate
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ValueError("fs must be a positive integer multiple of the reporting rate")
    n = int(round(fs * spec.duration))
    truth = GroundTruth(spec, t0)
    t = t0 + np.arange(n) / fs
    return SampledSignal(fs=fs, samples=truth.waveform(t), t0=t0), truth


# sensor path ---------------------------------------------------------------

@dataclass(frozen=True)
class SensorModel:
    """D-dot voltage sensor followed by the analog anti-alias filter."""

    epsilon: float = EPSILON_0
    plate_area: float = 1e-4  # 1 cm^2
    feedback_resistance: float = 20e6
    hall_sensitivity: float = 24.2  # mT/V
    lpf_cutoff: float = 100.0
    lpf_order: int = 3

    def __post_init__(self):
        if self.plate_area <= 0:
            raise ValueError("plate_area must be positive")
        if self.lpf_cutoff <= 0:
            raise ValueError("lpf_cutoff must be positive")

    @property
    def ddot_gain(self) -> float:
        """Volts out per (V/m)/s of field slew."""
        return self.epsilon * self.plate_area * self.feedback_resistance

    def hall_volts(self, flux_mT):
        """Hall-sensor output voltage for a flux density in mT."""
        return np.asarray(flux_mT) / self.hall_sensitivity


def ddot_transfer(sig: SampledSignal, model: SensorModel,
                  method: str = "spectral") -> SampledSignal:
    """Differentiate ``sig`` and scale by eps*A*R.

    ``method="spectral"`` differentiates in the DFT domain (exact for tones
    with an integer number of cycles in the record).  ``method="central"``
    uses the second-order central difference, whose gain at ``f`` is
    ``sin(2*pi*f/fs) * fs`` instead of ``2*pi*f``.
    """
    x = sig.samples
    if method == "spectral":
        n = x.size
        spec = np.fft.rfft(x)
        w = TWO_PI * np.fft.rfftfreq(n, d=1.0 / sig.fs)
        if n % 2 == 0:
            w[-1] = 0.0  # Nyquist bin has no defined derivative
        dx = np.fft.irfft(1j * w * spec, n=n)
    elif method == "central":
        dx = np.gradient(x, 1.0 / sig.fs, edge_order=2)
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    return sig.with_samples(model.ddot_gain * dx)


def central_difference_gain(f: float, fs: float) -> float:
    """Magnitude response of the central-difference differentiator."""
    return math.sin(TWO_PI * f / fs) * fs


def sensor_lpf(sig: SampledSignal, model: SensorModel) -> SampledSignal:
    """Bilinear-transformed Butterworth model of the 3rd-order 100-Hz filter."""
    b, a = sps.butter(model.lpf_order, model.lpf_cutoff, btype="low", fs=sig.fs)
    return sig.with_samples(sps.lfilter(b, a, sig.samples))


# ADC -----------------------------------------------------------------------

@dataclass(frozen=True)
class AdcModel:
    resolution_bits: int = 16
    enob: float = 16.0
    full_scale: float = 3.3

    def __post_init__(self):
        if not 1 <= self.enob <= self.resolution_bits:
            raise ValueError("need 1 <= enob <= resolution_bits")

    @property
    def lsb(self) -> float:
        return self.full_scale / 2 ** self.resolution_bits

    @property
    def added_noise_rms(self) -> float:
        """Gaussian noise added ahead of the quantizer.

        Chosen so quantization plus noise gives a full-scale-sine SINAD of
        20*log10(2)*enob + 10*log10(1.5) dB; zero when enob == resolution.
        """
        extra = 4.0 ** (self.resolution_bits - self.enob) - 1.0
        return self.lsb * math.sqrt(extra / 12.0)

    @staticmethod
    def ideal_sinad_db(bits: float) -> float:
        return 20.0 * math.log10(2.0) * bits + 10.0 * math.log10(1.5)


def apply_adc(sig: SampledSignal, adc: AdcModel, seed: int) -> SampledSignal:
    """Quantize a bipolar signal (volts about mid-scale) and add ENOB noise.

    Out-of-range samples are clamped to the end codes and counted in
    ``clipped`` on the returned signal.
    """
    rng = np.random.default_rng(seed)
    x = sig.samples
    sigma = adc.added_noise_rms
    if sigma > 0.0:
        x = x + rng.normal(0.0, sigma, size=x.size)
    half = 2 ** (adc.resolution_bits - 1)
    codes = np.round(x / adc.lsb)
    clipped = int(np.count_nonzero((codes < -half) | (codes > half - 1)))
    codes = np.clip(codes, -half, half - 1)
    return sig.with_samples(codes * adc.lsb, clipped=sig.clipped + clipped)


def measure_sinad_db(x: np.ndarray, fs: float, tone_hz: float) -> float:
    """SINAD of a record holding an integer number of cycles of one tone."""
    x = np.asarray(x, dtype=np.float64) - np.mean(x)
    spec = np.abs(np.fft.rfft(x)) ** 2
    k = int(round(tone_hz * x.size / fs))
    p_sig = spec[k]
    p_rest = spec[1:].sum() - p_sig
    return 10.0 * math.log10(p_sig / p_rest)


__all__ = [
    "AdcModel", "GroundTruth", "SampledSignal", "SensorModel", "SignalKind",
    "TestSignalSpec", "apply_adc", "central_difference_gain", "ddot_transfer",
    "measure_sinad_db", "sensor_lpf", "synthesize",
]
