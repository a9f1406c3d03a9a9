"""Scenario documents: parsing, validation, presets and emission.

A scenario is a JSON object. Quantities are either bare numbers, taken as
SI (radians for angles), or strings with an explicit unit such as
``"640 um"``, ``"7.2 deg"`` or ``"91 pm/mV"``. Unknown keys are rejected.

Example::

    {
      "wavelength": "780 nm",
      "a": "640 um",
      "postselect_prob": 0.02,
      "sigma": "1240 um",
      "input_power": "3.2 mW",
      "geometry": {"l_lm": "48 cm", "l_md": "114 cm"},
      "piezo": {"response": "91 pm/mV", "lever_arm": "3.5 cm"},
      "drive_vpp": "500 mV",
      "drive_freq": "100 Hz",
      "detector": {"noise_rms": "auto", "lock_floor_drive": "220 nV"},
      "lockin": {"tau": "100 ms"},
      "sweep": {"variable": "sigma", "start": "640 um", "stop": "1500 um", "points": 25}
    }

``noise_rms: "auto"`` calibrates the detector noise so that, on an octave
ladder of drives, ``lock_floor_drive`` is the smallest one the lock-in can
hold: the SNR threshold is crossed half an octave below it.
"""

from __future__ import annotations

import copy
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Optional

import numpy as np
import pint

from weakamp.beamgeom import OpticalLayout, PiezoCalibration, drive_to_kick, pointer_shift_experimental
from weakamp.detector import DetectorConfig, LockInConfig, calibrate_noise_rms, stray_power
from weakamp.errors import ConfigError
from weakamp.weakcore import phase_for_probability, postselection_probability

SWEEP_VARIABLES = ("sigma", "phi", "drive_vpp", "k_times_a")
SWEEP_UNITS = {"sigma": "m", "phi": "rad", "drive_vpp": "V", "k_times_a": ""}

# Angles the published beam-size sweep does not label; illustrative only.
COMPANION_PHIS_DEG = (11.0, 22.0)


@lru_cache(maxsize=None)
def _ureg() -> pint.UnitRegistry:
    return pint.UnitRegistry()


def to_si(value: Any, unit: str, where: str) -> float:
    """Convert a bare number (already SI) or a unit string to ``unit``."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a quantity in {unit or 'dimensionless'}, got a boolean", where)
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        try:
            q = _ureg().Quantity(value.strip())
        except Exception as exc:
            raise ConfigError(f"cannot parse quantity {value!r} ({exc})", where) from None
        if isinstance(q, (int, float)):
            out = float(q)
        else:
            try:
                out = float(q.to(unit or "dimensionless").magnitude)
            except pint.DimensionalityError:
                raise ConfigError(
                    f"{value!r} is not convertible to {unit or 'a dimensionless number'}", where
                ) from None
    else:
        raise ConfigError(f"expected a number or a unit string, got {type(value).__name__}", where)
    if not math.isfinite(out):
        raise ConfigError("value is not finite", where)
    return out


@dataclass(frozen=True)
class Geometry:
    l_lm: float
    l_md: float
    s_i: Optional[float] = None


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep. ``values``, when given, overrides start/stop/points."""

    variable: str
    start: float = 0.0
    stop: float = 0.0
    points: int = 0
    scale: str = "linear"
    values: Optional[tuple[float, ...]] = None
    phis: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"sweep scale must be 'linear' or 'log', got {self.scale!r}")
        if self.values is None:
            if self.points < 1:
                raise ValueError("sweep needs at least one point")
            if self.scale == "log" and not (self.start > 0 and self.stop > 0):
                raise ValueError("log sweep needs positive start and stop")
        if self.phis is not None and not self.phis:
            raise ValueError("phis must not be empty")

    def grid(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class Scenario:
    wavelength: float
    a: float
    phi: float
    sigma: float
    input_power: float
    geometry: Geometry
    piezo: PiezoCalibration
    drive_vpp: float
    drive_freq: float
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    lockin: LockInConfig = field(default_factory=LockInConfig)
    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        checks = {
            "wavelength": self.wavelength > 0,
            "a": self.a > 0,
            "sigma": self.sigma >= self.a * (1 - 1e-12),
            "input_power": self.input_power > 0,
            "drive_vpp": self.drive_vpp >= 0,
            "drive_freq": self.drive_freq > 0,
            "phi": 0 < self.phi <= math.pi,
        }
        for name, ok in checks.items():
            if not ok:
                raise ConfigError(f"invalid value {getattr(self, name)!r}", name)
        # constructing the layout validates the distances
        try:
            self.layout
        except ValueError as exc:
            raise ConfigError(str(exc), "geometry") from None
        if 2 * self.drive_freq >= self.lockin.sample_rate:
            raise ConfigError("lock-in sample rate must exceed twice the drive frequency", "lockin.sample_rate")

    @property
    def k0(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def layout(self) -> OpticalLayout:
        return OpticalLayout(l_lm=self.geometry.l_lm, l_md=self.geometry.l_md,
                             a=self.a, k0=self.k0, s_i=self.geometry.s_i)

    @property
    def postselect_prob(self) -> float:
        return postselection_probability(self.phi)

    def signal_power(self, phi: Optional[float] = None) -> float:
        """Dark-port power reaching the detector [W]."""
        return self.input_power * postselection_probability(self.phi if phi is None else phi)

    def deflection_per_volt(self, phi: Optional[float] = None, sigma: Optional[float] = None) -> float:
        """Ideal amplified detector deflection per drive volt [m/V]."""
        k = drive_to_kick(1.0, self.piezo, self.k0)
        return pointer_shift_experimental(k, self.phi if phi is None else phi,
                                          self.sigma if sigma is None else sigma, self.layout)


# ---- parsing -----------------------------------------------------------------

_TOP_KEYS = {"wavelength", "a", "phi", "postselect_prob", "sigma", "input_power", "geometry",
             "piezo", "drive_vpp", "drive_freq", "detector", "lockin", "sweep"}
_REQUIRED = ("wavelength", "a", "sigma", "input_power", "geometry", "piezo", "drive_vpp", "drive_freq")


def _check_keys(obj: Any, allowed: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError("expected an object", where or "<root>")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        path = f"{where}.{unknown[0]}" if where else unknown[0]
        raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", path)
    return obj


def _require(obj: dict, key: str, where: str) -> Any:
    if key not in obj:
        raise ConfigError("missing required key", f"{where}.{key}" if where else key)
    return obj[key]


def _build(cls, where: str, **kwargs):
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), where) from None


def _parse_geometry(obj: Any) -> Geometry:
    obj = _check_keys(obj, {"l_lm", "l_md", "s_i"}, "geometry")
    geo = Geometry(
        l_lm=to_si(_require(obj, "l_lm", "geometry"), "m", "geometry.l_lm"),
        l_md=to_si(_require(obj, "l_md", "geometry"), "m", "geometry.l_md"),
        s_i=None if obj.get("s_i") is None else to_si(obj["s_i"], "m", "geometry.s_i"),
    )
    for name in ("l_lm", "l_md"):
        if not getattr(geo, name) > 0:
            raise ConfigError("distance must be positive", f"geometry.{name}")
    if geo.s_i == 0:
        raise ConfigError("lens image distance must be non-zero", "geometry.s_i")
    return geo


def _parse_piezo(obj: Any) -> PiezoCalibration:
    obj = _check_keys(obj, {"response", "lever_arm"}, "piezo")
    return _build(
        PiezoCalibration, "piezo",
        response=to_si(_require(obj, "response", "piezo"), "m/V", "piezo.response"),
        lever_arm=to_si(_require(obj, "lever_arm", "piezo"), "m", "piezo.lever_arm"),
    )


def _parse_lockin(obj: Any) -> LockInConfig:
    if obj is None:
        return LockInConfig()
    obj = _check_keys(obj, {"sample_rate", "duration", "tau", "snr_threshold"}, "lockin")
    units = {"sample_rate": "Hz", "duration": "s", "tau": "s", "snr_threshold": ""}
    kwargs = {k: to_si(v, units[k], f"lockin.{k}") for k, v in obj.items()}
    return _build(LockInConfig, "lockin", **kwargs)


def _parse_seed(value: Any, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer", where)
    return value


def _parse_detector(obj: Any, partial: dict) -> DetectorConfig:
    if obj is None:
        return DetectorConfig()
    obj = _check_keys(obj, {"kind", "active_halfwidth", "noise_rms", "lock_floor_drive",
                            "stray_power_fraction", "stray_centroid", "reference_power", "seed"},
                      "detector")
    kwargs: dict[str, Any] = {}
    if "kind" in obj:
        kwargs["kind"] = obj["kind"]
    for key, unit in (("active_halfwidth", "m"), ("stray_power_fraction", ""),
                      ("stray_centroid", "m")):
        if key in obj:
            kwargs[key] = to_si(obj[key], unit, f"detector.{key}")
    if obj.get("reference_power") is not None:
        kwargs["reference_power"] = to_si(obj["reference_power"], "W", "detector.reference_power")
    if "seed" in obj:
        kwargs["seed"] = _parse_seed(obj["seed"], "detector.seed")
    if obj.get("noise_rms") == "auto":
        if "lock_floor_drive" not in obj:
            raise ConfigError("noise_rms 'auto' needs lock_floor_drive", "detector.lock_floor_drive")
        floor_drive = to_si(obj["lock_floor_drive"], "V", "detector.lock_floor_drive")
        if not floor_drive > 0:
            raise ConfigError("lock_floor_drive must be positive", "detector.lock_floor_drive")
        kwargs["noise_rms"] = floor_calibrated_noise(partial, floor_drive, kwargs)
    elif "noise_rms" in obj:
        if "lock_floor_drive" in obj:
            raise ConfigError("lock_floor_drive only applies with noise_rms 'auto'", "detector.lock_floor_drive")
        kwargs["noise_rms"] = to_si(obj["noise_rms"], "m", "detector.noise_rms")
    return _build(DetectorConfig, "detector", **kwargs)


def _parse_sweep(obj: Any) -> Optional[SweepSpec]:
    if obj is None:
        return None
    obj = _check_keys(obj, {"variable", "start", "stop", "points", "scale", "values", "phis"}, "sweep")
    variable = _require(obj, "variable", "sweep")
    if variable not in SWEEP_VARIABLES:
        raise ConfigError(f"must be one of {', '.join(SWEEP_VARIABLES)}", "sweep.variable")
    unit = SWEEP_UNITS[variable]
    kwargs: dict[str, Any] = {"variable": variable, "scale": obj.get("scale", "linear")}
    if "values" in obj:
        if not isinstance(obj["values"], list) or not obj["values"]:
            raise ConfigError("values must be a non-empty list", "sweep.values")
        kwargs["values"] = tuple(to_si(v, unit, f"sweep.values[{i}]") for i, v in enumerate(obj["values"]))
    else:
        kwargs["start"] = to_si(_require(obj, "start", "sweep"), unit, "sweep.start")
        kwargs["stop"] = to_si(_require(obj, "stop", "sweep"), unit, "sweep.stop")
        points = _require(obj, "points", "sweep")
        if isinstance(points, bool) or not isinstance(points, int):
            raise ConfigError("points must be an integer", "sweep.points")
        kwargs["points"] = points
    if "phis" in obj:
        if not isinstance(obj["phis"], list):
            raise ConfigError("phis must be a list", "sweep.phis")
        kwargs["phis"] = tuple(to_si(v, "rad", f"sweep.phis[{i}]") for i, v in enumerate(obj["phis"]))
    return _build(SweepSpec, "sweep", **kwargs)


def floor_calibrated_noise(partial: dict, floor_drive: float, detector_kwargs: dict) -> float:
    """Noise RMS placing the lock threshold half an octave below ``floor_drive``."""
    probe = DetectorConfig(**{k: v for k, v in detector_kwargs.items() if k != "noise_rms"})
    scenario = Scenario(detector=probe, **partial)
    slope = scenario.deflection_per_volt()
    p_sig = scenario.signal_power()
    # stray light scales the recovered slope by P_sig / (P_sig + P_stray)
    slope *= p_sig / (p_sig + stray_power(p_sig, probe))
    threshold_drive = floor_drive / math.sqrt(2.0)
    peak = 0.5 * slope * threshold_drive
    return calibrate_noise_rms(peak, scenario.lockin.snr_threshold, scenario.lockin)


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _check_keys(doc, _TOP_KEYS, "")
    for key in _REQUIRED:
        _require(doc, key, "")
    if ("phi" in doc) == ("postselect_prob" in doc):
        raise ConfigError("give exactly one of phi or postselect_prob", "phi")
    if "phi" in doc:
        phi = to_si(doc["phi"], "rad", "phi")
    else:
        p = to_si(doc["postselect_prob"], "", "postselect_prob")
        if not 0 < p <= 1:
            raise ConfigError("must lie in (0, 1]", "postselect_prob")
        phi = phase_for_probability(p)
    partial = dict(
        wavelength=to_si(doc["wavelength"], "m", "wavelength"),
        a=to_si(doc["a"], "m", "a"),
        phi=phi,
        sigma=to_si(doc["sigma"], "m", "sigma"),
        input_power=to_si(doc["input_power"], "W", "input_power"),
        geometry=_parse_geometry(doc["geometry"]),
        piezo=_parse_piezo(doc["piezo"]),
        drive_vpp=to_si(doc["drive_vpp"], "V", "drive_vpp"),
        drive_freq=to_si(doc["drive_freq"], "Hz", "drive_freq"),
        lockin=_parse_lockin(doc.get("lockin")),
    )
    # validate the optics before the detector calibration relies on them
    Scenario(**partial)
    detector = _parse_detector(doc.get("detector"), partial)
    return Scenario(detector=detector, sweep=_parse_sweep(doc.get("sweep")), **partial)


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a JSON scenario document.

    Raises
    ------
    ConfigError
        With ``location`` set to ``line L column C`` for malformed JSON, or to
        the dotted field path for validation failures.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return scenario_from_dict(doc)


# ---- emission ----------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    """Plain SI representation; ``scenario_from_dict`` inverts it exactly."""
    det = dataclasses.asdict(s.detector)
    if det["reference_power"] is None:
        del det["reference_power"]
    doc = {
        "wavelength": s.wavelength,
        "a": s.a,
        "phi": s.phi,
        "sigma": s.sigma,
        "input_power": s.input_power,
        "geometry": {k: v for k, v in dataclasses.asdict(s.geometry).items() if v is not None},
        "piezo": dataclasses.asdict(s.piezo),
        "drive_vpp": s.drive_vpp,
        "drive_freq": s.drive_freq,
        "detector": det,
        "lockin": dataclasses.asdict(s.lockin),
    }
    if s.sweep is not None:
        sw = {"variable": s.sweep.variable, "scale": s.sweep.scale}
        if s.sweep.values is not None:
            sw["values"] = list(s.sweep.values)
        else:
            sw.update(start=s.sweep.start, stop=s.sweep.stop, points=s.sweep.points)
        if s.sweep.phis is not None:
            sw["phis"] = list(s.sweep.phis)
        doc["sweep"] = sw
    return doc


def emit_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2, sort_keys=True)


def scenario_hash(s: Scenario) -> str:
    canonical = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---- presets -----------------------------------------------------------------

PRESETS: dict[str, dict] = {
    "dixon2009": {
        "wavelength": "780 nm",
        "a": "640 um",
        "postselect_prob": 0.02,
        "sigma": "1240 um",
        "input_power": "3.2 mW",
        "geometry": {"l_lm": "48 cm", "l_md": "114 cm"},
        "piezo": {"response": "91 pm/mV", "lever_arm": "3.5 cm"},
        "drive_vpp": "500 mV",
        "drive_freq": "100 Hz",
        "detector": {
            "kind": "quadrant",
            "active_halfwidth": "5 mm",
            "noise_rms": "auto",
            "lock_floor_drive": "220 nV",
            "seed": 2009,
        },
        "lockin": {"sample_rate": "10 kHz", "duration": "5 s", "tau": "100 ms", "snr_threshold": 3},
    },
}


def preset_document(name: str) -> dict:
    try:
        return copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset (known: {', '.join(sorted(PRESETS))})", "--preset") from None


def load_preset(name: str) -> Scenario:
    return scenario_from_dict(preset_document(name))
