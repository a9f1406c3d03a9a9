"""Which-path system states, the weak value, and the first-order pointer shift.

The two-level system is the propagation direction inside the Sagnac loop.
State vectors are ordered ``(cw, ccw)`` and the which-path observable is
``A = diag(+1, -1)``. The mirror coupling ``exp(-i x A k)`` puts the phase
ramp ``exp(-i k x)`` on the clockwise beam and ``exp(+i k x)`` on the
counter-clockwise one, so the two directions are deflected oppositely.

Conventions
-----------
- Angles are radians. Degrees are converted at the config boundary only.
- The meter size ``a`` is the standard deviation of the transverse
  *intensity* profile, ``|psi(x)|^2 ~ exp(-x^2 / (2 a^2))``, so that
  ``a = sqrt(<x^2>)``. A 1/e^2 radius ``w`` corresponds to ``a = w / 2``.
- With the states exactly as written in :func:`preselected_state` and
  :func:`postselected_state`, the weak value evaluates to ``+i cot(phi/2)``.
  Only its magnitude and the fact that it is purely imaginary are relied on
  downstream; the sign of the measured shift is fixed by geometry.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from weakamp.errors import DegeneratePostSelectionError, WeakRegimeWarning

NORM_TOL = 1e-12
# |<psi_f|psi_i>| below this is treated as a perfectly dark port.
DEGENERATE_OVERLAP = 1e-15
# a * k0 must exceed this for the paraxial description to hold.
PARAXIAL_MIN_AK0 = 100.0


@dataclass(frozen=True)
class SystemState:
    """Normalized which-path state ``amp_cw |cw> + amp_ccw |ccw>``."""

    amp_cw: complex
    amp_ccw: complex

    def __post_init__(self):
        norm = abs(self.amp_cw) ** 2 + abs(self.amp_ccw) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"SystemState is not normalized (norm^2 = {norm!r})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp_cw, self.amp_ccw], dtype=complex)

    def inner(self, other: "SystemState") -> complex:
        """Return ``<self|other>``."""
        return complex(np.vdot(self.vector, other.vector))

    def apply_which_path(self) -> np.ndarray:
        """Return ``A|self>`` as a bare vector (it stays normalized, but
        ``A`` is an observable, not a state preparation)."""
        return np.array([self.amp_cw, -self.amp_ccw], dtype=complex)

    def expectation(self, bra: "SystemState") -> complex:
        """Return the transition element ``<bra|A|self>``."""
        return complex(np.vdot(bra.vector, self.apply_which_path()))


@dataclass(frozen=True)
class GaussianMeter:
    """Transverse Gaussian pointer.

    Parameters
    ----------
    a : float
        Intensity standard deviation ``sqrt(<x^2>)`` [m].
    k0 : float
        Optical wavenumber ``2 pi / lambda`` [rad/m].
    """

    a: float
    k0: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"beam size a must be positive, got {self.a!r}")
        if not (self.k0 > 0 and math.isfinite(self.k0)):
            raise ValueError(f"wavenumber k0 must be positive, got {self.k0!r}")
        if self.a * self.k0 <= PARAXIAL_MIN_AK0:
            warnings.warn(
                f"a*k0 = {self.a * self.k0:.3g} is not >> 1; paraxial treatment is doubtful",
                WeakRegimeWarning,
                stacklevel=3,
            )

    @classmethod
    def from_wavelength(cls, a: float, wavelength: float) -> "GaussianMeter":
        return cls(a=a, k0=2.0 * math.pi / wavelength)

    def wavefunction(self, x):
        """Real, L2-normalized position amplitude ``psi(x)``."""
        x = np.asarray(x, dtype=float)
        return (2.0 * math.pi * self.a**2) ** -0.25 * np.exp(-(x**2) / (4.0 * self.a**2))


@dataclass(frozen=True)
class Interaction:
    """Mirror kick ``k`` [rad/m] and SBC relative phase ``phi`` [rad]."""

    k: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.k) and math.isfinite(self.phi)):
            raise ValueError("Interaction needs finite k and phi")


def preselected_state(phi: float) -> SystemState:
    """State after the input beamsplitter and the SBC phase ``phi``."""
    if not math.isfinite(phi):
        raise ValueError(f"phi must be finite, got {phi!r}")
    s = 1.0 / math.sqrt(2.0)
    return SystemState(
        amp_cw=complex(np.exp(-0.5j * phi)) * s,
        amp_ccw=1j * complex(np.exp(0.5j * phi)) * s,
    )


def postselected_state() -> SystemState:
    """The dark-port projection state."""
    s = 1.0 / math.sqrt(2.0)
    return SystemState(amp_cw=1j * s, amp_ccw=complex(s))


def _overlap_and_transition(phi: float) -> tuple[complex, complex]:
    psi_i = preselected_state(phi)
    psi_f = postselected_state()
    return psi_f.inner(psi_i), psi_i.expectation(psi_f)


def weak_value(phi: float) -> complex:
    """Weak value ``<psi_f|A|psi_i> / <psi_f|psi_i>`` from the state vectors.

    Raises
    ------
    DegeneratePostSelectionError
        If ``phi`` is a multiple of ``2 pi`` so the dark port is fully dark.
    """
    overlap, transition = _overlap_and_transition(phi)
    if abs(overlap) < DEGENERATE_OVERLAP:
        raise DegeneratePostSelectionError(
            f"pre- and post-selected states are orthogonal at phi = {phi!r}"
        )
    return transition / overlap


def weak_value_magnitude(phi: float) -> float:
    """``|A_w| = |cot(phi/2)|``, with the same degeneracy check as :func:`weak_value`."""
    return abs(weak_value(phi))


def postselection_probability(phi: float) -> float:
    """Dark-port probability ``sin^2(phi/2)``."""
    return math.sin(0.5 * phi) ** 2


def phase_for_probability(p_ps: float) -> float:
    """SBC phase in ``(0, pi]`` giving post-selection probability ``p_ps``."""
    if not 0.0 < p_ps <= 1.0:
        raise ValueError(f"post-selection probability must be in (0, 1], got {p_ps!r}")
    return 2.0 * math.asin(math.sqrt(p_ps))


def pointer_shift_collimated(inter: Interaction, meter: GaussianMeter) -> float:
    """First-order post-selected centroid shift ``2 k a^2 |A_w|`` [m].

    A :class:`~weakamp.errors.WeakRegimeWarning` is issued when the
    interaction violates the assumptions behind the first-order expansion.
    """
    from weakamp.oracle import validity_check

    flags = validity_check(meter, inter)
    if not flags.all_ok:
        warnings.warn(
            f"weak-value expansion outside its domain: {flags.describe()}",
            WeakRegimeWarning,
            stacklevel=2,
        )
    return 2.0 * inter.k * meter.a**2 * weak_value_magnitude(inter.phi)
