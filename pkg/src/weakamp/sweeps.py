"""Parameter sweeps producing deflection tables.

Every length, angle and drive in a row is peak-to-peak. ``pointer_shift_m``
is the detector-plane deflection from the measurable-quantity formula,
after stray-light contamination when that is configured, and
``amplification`` is always ``pointer_shift_m / delta_m``.
``exact_centroid_m`` is the all-orders oracle in the interferometer exit
plane, taken peak-to-peak as ``2 * centroid(k_pp / 2)``.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

import numpy as np

from weakamp import beamgeom, oracle
from weakamp.detector import (
    contaminated_centroid,
    lockin_demodulate,
    simulate_drive,
    stray_power,
)
from weakamp.errors import WeakAmpError
from weakamp.scenario import COMPANION_PHIS_DEG, Scenario, SweepSpec, scenario_hash
from weakamp.weakcore import GaussianMeter, Interaction, postselection_probability

DEFAULT_SIGMA_RANGE = (640e-6, 1500e-6, 25)
# octave ladder around the observed floor, plus the calibration drive
DEFAULT_FIG3_DRIVES = (27.5e-9, 55e-9, 110e-9, 220e-9, 440e-9, 880e-9,
                       1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.5)


@dataclass
class SweepRow:
    sweep_value: float
    phi_rad: float
    sigma_m: float
    drive_vpp: float
    mirror_angle_rad: float
    piezo_travel_m: float
    pointer_shift_m: Optional[float] = None
    exact_centroid_m: Optional[float] = None
    delta_m: Optional[float] = None
    amplification: Optional[float] = None
    postselect_prob: Optional[float] = None
    ka: Optional[float] = None
    ka_small: Optional[bool] = None
    weak_coupling: Optional[bool] = None
    lockin_amplitude_m: Optional[float] = None
    lockin_angle_rad: Optional[float] = None
    locked: Optional[bool] = None
    snr_estimate: Optional[float] = None
    error: str = ""


COLUMNS = tuple(f.name for f in dataclasses.fields(SweepRow))


@dataclass
class SweepTable:
    name: str
    rows: list[SweepRow]
    metadata: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {_meta_text(value)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.rows:
            writer.writerow([_cell(getattr(row, c)) for c in COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {"name": self.name, "metadata": self.metadata,
               "rows": [dataclasses.asdict(r) for r in self.rows]}
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _meta_text(value) -> str:
    if isinstance(value, (list, tuple)):
        return " ".join(_cell(v) for v in value)
    return _cell(value)


def _row_seed(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def evaluate_point(scenario: Scenario, *, phi: float, sigma: float, drive_vpp: float,
                   sweep_value: float, index: int = 0, noise: bool = False,
                   kick: Optional[float] = None) -> SweepRow:
    """One table row. Numeric failures land in the ``error`` column."""
    cal = scenario.piezo
    k0 = scenario.k0
    row = SweepRow(
        sweep_value=float(sweep_value),
        phi_rad=float(phi),
        sigma_m=float(sigma),
        drive_vpp=float(drive_vpp),
        mirror_angle_rad=float(beamgeom.mirror_angle(drive_vpp, cal)),
        piezo_travel_m=float(beamgeom.piezo_travel(drive_vpp, cal)),
        postselect_prob=postselection_probability(phi),
    )
    k = beamgeom.momentum_kick(row.mirror_angle_rad, k0) if kick is None else float(kick)
    meter = GaussianMeter(scenario.a, k0)
    errors = []
    try:
        ideal = beamgeom.pointer_shift_experimental(k, phi, sigma, scenario.layout)
        p_sig = scenario.signal_power(phi)
        row.pointer_shift_m = float(contaminated_centroid(ideal, p_sig, scenario.detector))
        row.delta_m = beamgeom.unamplified_deflection(k, scenario.layout.l_md, k0)
        inter = Interaction(k=k, phi=phi)
        half = Interaction(k=0.5 * k, phi=phi)
        row.exact_centroid_m = 2.0 * oracle.exact_centroid(meter, half)
        flags = oracle.validity_check(meter, inter)
        row.ka, row.ka_small, row.weak_coupling = flags.ka, bool(flags.ka_small), bool(flags.weak_coupling)
        if row.delta_m == 0:
            errors.append("zero deflection: amplification undefined")
        else:
            row.amplification = beamgeom.amplification_factor(row.pointer_shift_m, row.delta_m)
    except (WeakAmpError, ValueError, ZeroDivisionError) as exc:
        errors.append(str(exc))

    if noise and row.pointer_shift_m is not None:
        try:
            _lockin_columns(row, scenario, phi, sigma, drive_vpp, k, _row_seed(scenario.detector.seed, index))
        except (WeakAmpError, ValueError) as exc:
            errors.append(f"lock-in: {exc}")
    row.error = "; ".join(errors)
    return row


def _lockin_columns(row: SweepRow, scenario: Scenario, phi: float, sigma: float,
                    drive_vpp: float, k: float, rng: np.random.Generator) -> None:
    kick_per_volt = beamgeom.drive_to_kick(1.0, scenario.piezo, scenario.k0)
    ideal_slope = beamgeom.pointer_shift_experimental(kick_per_volt, phi, sigma, scenario.layout)
    p_sig = scenario.signal_power(phi)
    seen_slope = ideal_slope * p_sig / (p_sig + stray_power(p_sig, scenario.detector))
    # drive equivalent of the row's kick (differs from drive_vpp for k*a sweeps)
    drive = k / kick_per_volt
    ts = simulate_drive(drive, scenario.drive_freq, scenario.lockin, scenario.detector,
                        ideal_slope, p_sig, sigma, rng=rng)
    result = lockin_demodulate(ts, scenario.drive_freq, scenario.lockin.tau,
                               scenario.lockin.snr_threshold)
    row.lockin_amplitude_m = result.amplitude
    row.lockin_angle_rad = result.amplitude / seen_slope * beamgeom.mirror_angle(1.0, scenario.piezo)
    row.locked = result.locked
    row.snr_estimate = result.snr_estimate


def table_metadata(name: str, scenario: Scenario, noise: bool, extra: Optional[dict] = None) -> dict:
    meta = {
        "table": name,
        "scenario_sha256": scenario_hash(scenario),
        "seed": scenario.detector.seed,
        "noise": "on" if noise else "off",
        "units": "SI; all deflections, angles and drives peak-to-peak",
    }
    meta.update(extra or {})
    return meta


def run_sweep(scenario: Scenario, spec: SweepSpec, *, noise: bool = False,
              phis: Optional[Sequence[float]] = None) -> list[SweepRow]:
    """Rows for ``spec`` in sweep order, one block per phase in ``phis``."""
    phis = list(phis if phis is not None else (spec.phis or (scenario.phi,)))
    if not phis:
        raise ValueError("phi list must not be empty")
    kick_per_volt = beamgeom.drive_to_kick(1.0, scenario.piezo, scenario.k0)
    rows = []
    index = 0
    for phi in phis:
        for value in spec.grid():
            kwargs = dict(phi=phi, sigma=scenario.sigma, drive_vpp=scenario.drive_vpp)
            kick = None
            value = float(value)
            if spec.variable == "sigma":
                kwargs["sigma"] = value
            elif spec.variable == "phi":
                kwargs["phi"] = value
            elif spec.variable == "drive_vpp":
                kwargs["drive_vpp"] = value
            else:  # k_times_a
                kick = value / scenario.a
                kwargs["drive_vpp"] = kick / kick_per_volt
            rows.append(evaluate_point(scenario, sweep_value=float(value), index=index,
                                       noise=noise, kick=kick, **kwargs))
            index += 1
    return rows


def default_fig2_phis(scenario: Scenario) -> list[float]:
    return [math.radians(7.2)] + [math.radians(d) for d in COMPANION_PHIS_DEG]


def run_fig2_sweep(scenario: Scenario, phis: Optional[Iterable[float]] = None, *,
                   noise: bool = False) -> SweepTable:
    """Deflection versus detector beam size, one block per SBC phase."""
    spec = scenario.sweep
    if spec is None or spec.variable != "sigma":
        lo, hi, n = DEFAULT_SIGMA_RANGE
        spec = SweepSpec(variable="sigma", start=max(lo, scenario.a), stop=hi, points=n)
    if phis is not None:
        phis = list(phis)
    elif spec.phis is not None:
        phis = list(spec.phis)
    else:
        phis = default_fig2_phis(scenario)
    if not phis:
        raise ValueError("phi list must not be empty")
    if not all(s > 0 for s in spec.grid()):
        raise ValueError("sigma range must be positive")
    companions = [p for p in phis if not math.isclose(math.degrees(p), 7.2, abs_tol=1e-9)]
    meta = table_metadata("fig2", scenario, noise, {
        "sweep": "sigma",
        "phis_rad": phis,
        "companion_phis_rad": companions,
    })
    return SweepTable("fig2", run_sweep(scenario, spec, noise=noise, phis=phis), meta)


def run_fig3_sweep(scenario: Scenario, *, noise: bool = False) -> SweepTable:
    """Mirror angle and recovered signal versus piezo drive."""
    spec = scenario.sweep
    if spec is None or spec.variable != "drive_vpp":
        spec = SweepSpec(variable="drive_vpp", values=DEFAULT_FIG3_DRIVES)
    drives = spec.grid()
    positive = drives[drives > 0]
    if positive.size < 2 or positive.max() / positive.min() < 1e3:
        raise ValueError("drive range must span at least three decades")
    rows = run_sweep(scenario, spec, noise=noise, phis=[scenario.phi])
    extra = {"sweep": "drive_vpp", "phi_rad": scenario.phi, "sigma_m": scenario.sigma}
    if noise:
        extra["floor_row"] = _floor_row(rows)
    return SweepTable("fig3", rows, table_metadata("fig3", scenario, noise, extra))


def _floor_row(rows: list[SweepRow]) -> str:
    """Index and drive of the first unlocked row walking down from the largest drive."""
    order = sorted(range(len(rows)), key=lambda i: rows[i].drive_vpp, reverse=True)
    for i in order:
        if not rows[i].locked:
            return f"{i} drive_vpp={rows[i].drive_vpp!r}"
    return "none"


def calibration_table(scenario: Scenario) -> SweepTable:
    """The calibration chain at the scenario drive and at each fig3 drive."""
    spec = SweepSpec(variable="drive_vpp", values=(scenario.drive_vpp,) + DEFAULT_FIG3_DRIVES)
    rows = run_sweep(scenario, spec, phis=[scenario.phi])
    return SweepTable("calibration", rows, table_metadata("calibration", scenario, False))


def oracle_check(scenario: Scenario, n_random: int = 200) -> dict:
    """Compare grid quadrature, closed form and first-order prediction."""
    meter = GaussianMeter(scenario.a, scenario.k0)
    k = beamgeom.drive_to_kick(scenario.drive_vpp, scenario.piezo, scenario.k0)
    inter = Interaction(k=k, phi=scenario.phi)
    field = oracle.dark_port_field(meter, inter)
    exact = oracle.exact_result(meter, inter)
    rng = np.random.default_rng(scenario.detector.seed)
    worst_c = worst_p = 0.0
    for _ in range(n_random):
        a = float(rng.uniform(100e-6, 2e-3))
        m = GaussianMeter(a, scenario.k0)
        it = Interaction(k=float(rng.uniform(1e-4, 0.5)) / a, phi=float(rng.uniform(0.05, math.pi - 0.05)))
        f = oracle.dark_port_field(m, it)
        c = oracle.exact_centroid(m, it)
        worst_c = max(worst_c, abs(oracle.numeric_centroid(f) - c) / abs(c))
        worst_p = max(worst_p, abs(f.power() - oracle.exact_postselect_prob(m, it)))
    return {
        "k_rad_per_m": k,
        "phi_rad": scenario.phi,
        "grid_centroid_m": oracle.numeric_centroid(field),
        "exact_centroid_m": exact.centroid,
        "first_order_centroid_m": exact.approx_centroid,
        "first_order_relative_error": exact.approx_centroid / exact.centroid - 1.0,
        "grid_postselect_prob": field.power(),
        "exact_postselect_prob": exact.postselect_prob,
        "validity": dataclasses.asdict(exact.validity),
        "random_trials": n_random,
        "max_relative_centroid_gap": worst_c,
        "max_probability_gap": worst_p,
        "scenario_sha256": scenario_hash(scenario),
    }


def with_stray(scenario: Scenario, fraction: float, reference_power: Optional[float] = None) -> Scenario:
    det = replace(scenario.detector, stray_power_fraction=fraction, reference_power=reference_power)
    return replace(scenario, detector=det)
