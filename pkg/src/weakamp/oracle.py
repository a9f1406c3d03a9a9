"""Exact dark-port physics for a Gaussian meter.

The dark-port amplitude is evaluated without truncating the coupling
``exp(-i x A k)``::

    u(x) = psi(x) <psi_f| exp(-i x A k) |psi_i>

whose modulus is ``|psi(x) sin(k x + phi/2)|``. Integrating the Gaussian
moments of ``psi(x)^2 sin^2(k x + phi/2)`` in closed form gives::

    P_ps  = (1 - cos(phi) exp(-2 k^2 a^2)) / 2
    <x>   = 2 k a^2 sin(phi) exp(-2 k^2 a^2) / (1 - cos(phi) exp(-2 k^2 a^2))

Both are checked against grid quadrature of :func:`dark_port_field`. All
quantities live in the interferometer exit plane; geometry factors to the
detector are applied in :mod:`weakamp.beamgeom`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from weakamp.errors import DegeneratePostSelectionError, GridExtentError
from weakamp.weakcore import (
    GaussianMeter,
    Interaction,
    postselected_state,
    preselected_state,
    weak_value_magnitude,
)

DEFAULT_SAMPLES = 4096
DEFAULT_HALF_WIDTH = 8.0  # in units of the beam size a
MIN_SAMPLES = 64


@dataclass(frozen=True)
class SampledField:
    """Complex amplitudes on the uniform grid ``x0 + dx * arange(n)``."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        if not self.dx > 0:
            raise GridExtentError(f"grid spacing must be positive, got {self.dx!r}")
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != 1 or values.size < MIN_SAMPLES:
            raise GridExtentError(f"need a 1-D grid of at least {MIN_SAMPLES} samples")
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.values.size)

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def power(self) -> float:
        return float(np.sum(self.intensity) * self.dx)


@dataclass(frozen=True)
class ValidityFlags:
    """Weak-regime assumptions and how comfortably they hold.

    Margins are ratios (right side over left side); a margin above 1 means
    the inequality holds.
    """

    ka: float
    ka_small: bool
    weak_coupling: bool
    overlap_below_one: bool
    ka_margin: float
    weak_margin: float

    @property
    def all_ok(self) -> bool:
        return self.ka_small and self.weak_coupling and self.overlap_below_one

    def describe(self) -> str:
        parts = []
        if not self.ka_small:
            parts.append(f"k*a = {self.ka:.3g} is not < 1")
        if not self.weak_coupling:
            parts.append(f"k*a*|<f|A|i>| >= |<f|i>| (margin {self.weak_margin:.3g})")
        if not self.overlap_below_one:
            parts.append("|<f|i>| = 1 (no post-selection)")
        return "; ".join(parts) or "ok"


@dataclass(frozen=True)
class ExactResult:
    centroid: float
    postselect_prob: float
    approx_centroid: float
    validity: ValidityFlags


def validity_check(meter: GaussianMeter, inter: Interaction) -> ValidityFlags:
    """Evaluate ``k a < 1`` and ``k a |<f|A|i>| < |<f|i>| < 1``."""
    psi_i = preselected_state(inter.phi)
    psi_f = postselected_state()
    overlap = abs(psi_f.inner(psi_i))
    transition = abs(psi_i.expectation(psi_f))
    ka = abs(inter.k) * meter.a
    lhs = ka * transition
    return ValidityFlags(
        ka=ka,
        ka_small=ka < 1.0,
        weak_coupling=lhs < overlap,
        overlap_below_one=overlap < 1.0 - 1e-12,
        ka_margin=math.inf if ka == 0 else 1.0 / ka,
        weak_margin=math.inf if lhs == 0 else overlap / lhs,
    )


def make_grid(meter: GaussianMeter, n_samples: int = DEFAULT_SAMPLES,
              half_width: float = DEFAULT_HALF_WIDTH) -> tuple[float, float, int]:
    """Return ``(x0, dx, n)`` for a symmetric grid of ``+-half_width * a``."""
    if n_samples < MIN_SAMPLES:
        raise GridExtentError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    if half_width < DEFAULT_HALF_WIDTH:
        raise GridExtentError(
            f"grid must cover +-{DEFAULT_HALF_WIDTH:g} a around the beam, got +-{half_width:g} a"
        )
    extent = 2.0 * half_width * meter.a
    dx = extent / (n_samples - 1)
    return -half_width * meter.a, dx, n_samples


def dark_port_field(meter: GaussianMeter, inter: Interaction,
                    n_samples: int = DEFAULT_SAMPLES,
                    half_width: float = DEFAULT_HALF_WIDTH) -> SampledField:
    """Sampled dark-port amplitude with the coupling kept to all orders.

    The field is not renormalized: its power equals the exact post-selection
    probability (the meter wavefunction carries unit power).
    """
    x0, dx, n = make_grid(meter, n_samples, half_width)
    x = x0 + dx * np.arange(n)
    psi_i = preselected_state(inter.phi)
    psi_f = postselected_state()
    # exp(-i x A k) is diagonal in the which-path basis
    system_amp = (
        np.conj(psi_f.amp_cw) * np.exp(-1j * inter.k * x) * psi_i.amp_cw
        + np.conj(psi_f.amp_ccw) * np.exp(1j * inter.k * x) * psi_i.amp_ccw
    )
    return SampledField(x0=x0, dx=dx, values=meter.wavefunction(x) * system_amp)


def single_path_field(meter: GaussianMeter, k: float,
                      which_path: Literal["cw", "ccw"],
                      n_samples: int = DEFAULT_SAMPLES,
                      half_width: float = DEFAULT_HALF_WIDTH) -> SampledField:
    """Meter field when the system is a which-path eigenstate (no interference)."""
    eigenvalue = {"cw": 1.0, "ccw": -1.0}.get(which_path)
    if eigenvalue is None:
        raise ValueError(f"which_path must be 'cw' or 'ccw', got {which_path!r}")
    x0, dx, n = make_grid(meter, n_samples, half_width)
    x = x0 + dx * np.arange(n)
    return SampledField(x0=x0, dx=dx,
                        values=meter.wavefunction(x) * np.exp(-1j * eigenvalue * k * x))


def numeric_centroid(field: SampledField) -> float:
    """Intensity-weighted mean position of a sampled field."""
    weights = field.intensity
    total = weights.sum()
    if not total > 0:
        raise ValueError("field carries no power")
    return float(np.dot(field.x, weights) / total)


def numeric_momentum(field: SampledField) -> float:
    """Mean transverse wavenumber ``<p>`` from the discrete spectrum."""
    spectrum = np.abs(np.fft.fft(field.values)) ** 2
    total = spectrum.sum()
    if not total > 0:
        raise ValueError("field carries no power")
    p = 2.0 * math.pi * np.fft.fftfreq(field.values.size, d=field.dx)
    return float(np.dot(p, spectrum) / total)


def detector_plane_centroid(field: SampledField, k0: float, distance: float) -> float:
    """Centroid after free paraxial propagation over ``distance``.

    The centroid of a paraxial beam moves on a straight line with slope
    ``<p>/k0``, so no diffraction integral is needed.
    """
    return numeric_centroid(field) + numeric_momentum(field) * distance / k0


def _dark_fraction(meter: GaussianMeter, inter: Interaction) -> tuple[float, float]:
    """Return ``(2 * P_ps, exp(-2 k^2 a^2))`` without cancellation at small k."""
    eps = 2.0 * (inter.k * meter.a) ** 2
    decay = math.exp(-eps)
    # 1 - cos(phi) e^-eps = 2 sin^2(phi/2) - cos(phi) (e^-eps - 1)
    twice_p = 2.0 * math.sin(0.5 * inter.phi) ** 2 - math.cos(inter.phi) * math.expm1(-eps)
    return twice_p, decay


def exact_postselect_prob(meter: GaussianMeter, inter: Interaction) -> float:
    """All-orders dark-port probability for a Gaussian meter."""
    twice_p, _ = _dark_fraction(meter, inter)
    return min(max(0.5 * twice_p, 0.0), 1.0)


def exact_centroid(meter: GaussianMeter, inter: Interaction) -> float:
    """All-orders post-selected centroid in the exit plane [m]."""
    twice_p, decay = _dark_fraction(meter, inter)
    if twice_p < 1e-300:
        raise DegeneratePostSelectionError("no light reaches the dark port (phi = 0 and k = 0)")
    return 2.0 * inter.k * meter.a**2 * math.sin(inter.phi) * decay / twice_p


def eigenstate_limit(meter: GaussianMeter, k: float, which_path: Literal["cw", "ccw"],
                     l_md: float) -> float:
    """Detector-plane centroid for a single which-path eigenstate.

    This is the simulated counterpart of calibrating with the interferometer
    beamsplitter removed: the centroid follows ray optics, ``-+k l_md / k0``
    for ``cw``/``ccw`` under the ``exp(-i x A k)`` coupling.
    """
    field = single_path_field(meter, k, which_path)
    return detector_plane_centroid(field, meter.k0, l_md)


def exact_result(meter: GaussianMeter, inter: Interaction) -> ExactResult:
    return ExactResult(
        centroid=exact_centroid(meter, inter),
        postselect_prob=exact_postselect_prob(meter, inter),
        approx_centroid=2.0 * inter.k * meter.a**2 * weak_value_magnitude(inter.phi),
        validity=validity_check(meter, inter),
    )
