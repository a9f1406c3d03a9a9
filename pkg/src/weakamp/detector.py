"""Detector read-out, stray light, drive time series and lock-in recovery.

Noise is white Gaussian and expressed directly as a centroid-equivalent RMS
per sample, so it can be calibrated against an observed detection floor
instead of predicted from an electronics budget.

Lock-in model
-------------
The record is AC-coupled (mean removed), mixed with ``2 sin`` and ``2 cos``
at the reference frequency and passed through a single-pole low-pass filter
of time constant ``tau``. For ``x = A sin(2 pi f t + theta)`` this gives
``X ~ A cos(theta)`` and ``Y ~ A sin(theta)``. After discarding ``5 tau`` of
settling, the recovered peak amplitude is ``|<X> + i <Y>|`` averaged over the
rest of the record.

The noise floor is the RMS magnitude of the *filtered* output at several
off-frequency references, i.e. the jitter an operator would see on the
instrument display at time constant ``tau``. Lock is declared when the
recovered amplitude exceeds ``snr_threshold`` times that floor.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np
from scipy.signal import lfilter
from scipy.special import erf, erfinv

from weakamp.errors import ClippingError, InsufficientDurationError, NyquistError

SETTLE_TAUS = 5.0
MIN_DURATION_TAUS = 10.0
# off-frequency references sit at f_ref * (1 +- OFF_BIN_STEP * m)
OFF_BIN_STEP = 0.25
OFF_BIN_ORDERS = (1, 2, 3)
# required filter rejection between the reference and the nearest off bin,
# expressed as 2 pi * (frequency gap) * tau
MIN_BIN_SEPARATION = 10.0


@dataclass(frozen=True)
class DetectorConfig:
    """Position detector and its contamination.

    Parameters
    ----------
    kind : {"quadrant", "ccd"}
    active_halfwidth : float
        Half the side of the active area [m].
    noise_rms : float
        Centroid-equivalent white noise per sample [m].
    stray_power_fraction : float
        ``P_stray / (P_stray + P_ref)``; 0 disables stray light.
    stray_centroid : float
        Position of the (stationary) stray light [m].
    reference_power : float or None
        ``P_ref`` [W]. ``None`` uses the signal power itself, so the fraction
        is then the share of stray light in the detected total.
    seed : int
    """

    kind: Literal["quadrant", "ccd"] = "quadrant"
    active_halfwidth: float = 5e-3
    noise_rms: float = 0.0
    stray_power_fraction: float = 0.0
    stray_centroid: float = 0.0
    reference_power: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("quadrant", "ccd"):
            raise ValueError(f"detector kind must be 'quadrant' or 'ccd', got {self.kind!r}")
        if not self.active_halfwidth > 0:
            raise ValueError("active_halfwidth must be positive")
        if not self.noise_rms >= 0:
            raise ValueError("noise_rms must be non-negative")
        if not 0.0 <= self.stray_power_fraction < 1.0:
            raise ValueError("stray_power_fraction must lie in [0, 1)")
        if self.reference_power is not None and not self.reference_power > 0:
            raise ValueError("reference_power must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class LockInConfig:
    sample_rate: float = 10_000.0
    duration: float = 5.0
    tau: float = 0.1
    snr_threshold: float = 3.0

    def __post_init__(self):
        if not (self.sample_rate > 0 and self.duration > 0 and self.tau > 0):
            raise ValueError("sample_rate, duration and tau must be positive")
        if not self.snr_threshold > 0:
            raise ValueError("snr_threshold must be positive")


@dataclass(frozen=True)
class TimeSeries:
    sample_rate: float
    samples: np.ndarray
    power: np.ndarray = field(default=None)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        object.__setattr__(self, "samples", samples)
        if self.power is None:
            object.__setattr__(self, "power", np.zeros_like(samples))
        else:
            object.__setattr__(self, "power", np.broadcast_to(
                np.asarray(self.power, dtype=float), samples.shape).copy())

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t_seconds", "centroid_m", "power_w"])
        for t, x, p in zip(self.t, self.samples, self.power):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(p))])
        return buf.getvalue()


@dataclass(frozen=True)
class LockInResult:
    """``amplitude`` is peak-to-peak in the units of the input record."""

    amplitude: float
    phase: float
    locked: bool
    snr_estimate: float
    noise_floor: float


def quadrant_signal(beam_centroid, sigma: float, cfg: DetectorConfig):
    """Difference-over-sum of a quadrant detector along one axis.

    For a Gaussian of intensity standard deviation ``sigma`` centred at ``d``
    the signal is ``erf(d / (sigma sqrt 2))``; its small-signal slope is
    ``sqrt(2/pi) / sigma``.

    Raises
    ------
    ClippingError
        If ``|d| + 3 sigma`` reaches the edge of the active area.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    d = np.asarray(beam_centroid, dtype=float)
    reach = np.max(np.abs(d)) + 3.0 * sigma
    if reach >= cfg.active_halfwidth:
        raise ClippingError(
            f"beam reaches {reach:.4g} m but the active half-width is {cfg.active_halfwidth:.4g} m"
        )
    return erf(d / (sigma * math.sqrt(2.0)))


def readout_centroid(beam_centroid, sigma: float, cfg: DetectorConfig):
    """Centroid reported by the configured detector.

    The quadrant path goes through the erf transfer and inverts it with the
    known beam size, so it reproduces the true centroid while still
    enforcing the active-area check. The CCD path is a direct centroid.
    """
    if cfg.kind == "ccd":
        return np.asarray(beam_centroid, dtype=float)
    signal = quadrant_signal(beam_centroid, sigma, cfg)
    return sigma * math.sqrt(2.0) * erfinv(signal)


def stray_power(signal_power: float, cfg: DetectorConfig) -> float:
    ref = signal_power if cfg.reference_power is None else cfg.reference_power
    f = cfg.stray_power_fraction
    return f / (1.0 - f) * ref


def contaminated_centroid(true_centroid, signal_power: float, cfg: DetectorConfig):
    """Power-weighted centroid of signal plus stationary stray light."""
    if not signal_power > 0:
        raise ValueError("signal_power must be positive")
    p_stray = stray_power(signal_power, cfg)
    x = np.asarray(true_centroid, dtype=float)
    out = (signal_power * x + p_stray * cfg.stray_centroid) / (signal_power + p_stray)
    return float(out) if out.ndim == 0 else out


def check_nyquist(sample_rate: float, f: float) -> None:
    if not sample_rate > 2.0 * f:
        raise NyquistError(f"sample rate {sample_rate:g} Hz does not exceed twice {f:g} Hz")


def simulate_drive(drive_vpp: float, f: float, lockin: LockInConfig, cfg: DetectorConfig,
                   deflection_per_volt: float, signal_power: float, sigma: float,
                   rng: Optional[np.random.Generator] = None) -> TimeSeries:
    """Detector centroid record under a sinusoidal piezo drive.

    Parameters
    ----------
    drive_vpp : float
        Peak-to-peak drive [V].
    f : float
        Drive frequency [Hz].
    deflection_per_volt : float
        Ideal detector deflection per drive volt [m/V]; the whole
        piezo -> mirror -> kick -> amplified shift chain is linear, so this
        slope carries it (see :func:`weakamp.sweeps.deflection_per_volt`).
    signal_power : float
        Dark-port power reaching the detector [W].
    sigma : float
        Beam size at the detector [m], for the read-out model.
    rng : numpy.random.Generator, optional
        Defaults to one seeded from ``cfg.seed``.
    """
    check_nyquist(lockin.sample_rate, f)
    n = int(round(lockin.duration * lockin.sample_rate))
    t = np.arange(n) / lockin.sample_rate
    drive = 0.5 * drive_vpp * np.sin(2.0 * math.pi * f * t)
    ideal = deflection_per_volt * drive
    seen = contaminated_centroid(ideal, signal_power, cfg)
    seen = readout_centroid(seen, sigma, cfg)
    if cfg.noise_rms > 0:
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        seen = seen + rng.normal(0.0, cfg.noise_rms, size=n)
    total = signal_power + stray_power(signal_power, cfg)
    return TimeSeries(sample_rate=lockin.sample_rate, samples=seen, power=total)


def _lowpass_coefficient(sample_rate: float, tau: float) -> float:
    return -math.expm1(-1.0 / (sample_rate * tau))


def _demodulate(x: np.ndarray, t: np.ndarray, f: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    b, a = [alpha], [1.0, alpha - 1.0]
    w = 2.0 * math.pi * f * t
    X = lfilter(b, a, 2.0 * x * np.sin(w))
    Y = lfilter(b, a, 2.0 * x * np.cos(w))
    return X, Y


def off_bin_frequencies(f_ref: float, sample_rate: float, tau: float) -> list[float]:
    gap = OFF_BIN_STEP * f_ref
    if 2.0 * math.pi * gap * tau < MIN_BIN_SEPARATION:
        raise ValueError(
            f"time constant {tau:g} s cannot separate {f_ref:g} Hz from its off-frequency bins"
        )
    freqs = []
    for m in OFF_BIN_ORDERS:
        for sign in (-1, 1):
            fo = f_ref * (1.0 + sign * OFF_BIN_STEP * m)
            if 0 < fo < 0.45 * sample_rate:
                freqs.append(fo)
    if not freqs:
        raise ValueError("no usable off-frequency bins below Nyquist")
    return freqs


def output_noise_floor(noise_rms: float, sample_rate: float, tau: float) -> float:
    """Expected RMS of ``|X + iY|`` for white input noise of ``noise_rms``.

    A single-pole filter ``y += alpha (u - y)`` driven by white noise of
    variance ``v`` settles at variance ``v alpha / (2 - alpha)``; mixing with
    ``2 sin`` doubles the input variance.
    """
    alpha = _lowpass_coefficient(sample_rate, tau)
    return 2.0 * noise_rms * math.sqrt(alpha / (2.0 - alpha))


def lockin_demodulate(ts: TimeSeries, f_ref: float, tau: float,
                      snr_threshold: float = 3.0) -> LockInResult:
    """Dual-phase lock-in recovery of the component at ``f_ref``.

    Raises
    ------
    InsufficientDurationError
        If the record is shorter than ``10 tau``.
    """
    if ts.duration < MIN_DURATION_TAUS * tau:
        raise InsufficientDurationError(
            f"record of {ts.duration:g} s is shorter than {MIN_DURATION_TAUS:g} time constants"
        )
    check_nyquist(ts.sample_rate, f_ref)
    x = ts.samples - ts.samples.mean()
    t = ts.t
    alpha = _lowpass_coefficient(ts.sample_rate, tau)
    keep = t >= SETTLE_TAUS * tau

    X, Y = _demodulate(x, t, f_ref, alpha)
    z = complex(X[keep].mean(), Y[keep].mean())
    peak = abs(z)

    power = []
    for fo in off_bin_frequencies(f_ref, ts.sample_rate, tau):
        Xo, Yo = _demodulate(x, t, fo, alpha)
        power.append(np.mean(Xo[keep] ** 2 + Yo[keep] ** 2))
    floor = math.sqrt(float(np.mean(power)))

    if floor > 0:
        snr = peak / floor
    else:
        snr = math.inf if peak > 0 else 0.0
    return LockInResult(
        amplitude=2.0 * peak,
        phase=math.atan2(z.imag, z.real),
        locked=bool(snr >= snr_threshold),
        snr_estimate=snr,
        noise_floor=floor,
    )


def calibrate_noise_rms(peak_amplitude: float, target_snr: float, lockin: LockInConfig) -> float:
    """Per-sample noise RMS that puts a sinusoid of ``peak_amplitude`` at ``target_snr``."""
    unit_floor = output_noise_floor(1.0, lockin.sample_rate, lockin.tau)
    return peak_amplitude / (target_snr * unit_floor)


def seeded_trials(n_trials: int, seed: int, trial: Callable[[np.random.Generator], object]) -> list:
    """Run ``trial`` with independent generators spawned from ``seed``, in index order."""
    children = np.random.SeedSequence(seed).spawn(n_trials)
    return [trial(np.random.default_rng(child)) for child in children]


def with_seed(cfg: DetectorConfig, seed: int) -> DetectorConfig:
    return replace(cfg, seed=seed)
