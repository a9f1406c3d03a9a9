"""Experiment geometry and the piezo -> mirror -> kick -> detector chain.

Drive voltages and every deflection derived from them are peak-to-peak.
Small-angle approximations (``tan(theta) = theta``) are used throughout.

Lens convention: the image distance ``s_i`` is signed (negative for a
diverging beam) and the image-to-mirror distance is ``l_im = l_lm + s_i``.
With this convention the measurable-quantity deflection formula
(:func:`pointer_shift_experimental`) equals :func:`lens_factor` times the
collimated result exactly, provided the *signed* detector beam size from
:func:`signed_sigma_at_detector` is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from weakamp.weakcore import weak_value_magnitude


@dataclass(frozen=True)
class OpticalLayout:
    """Distances [m] and beam parameters of the set-up.

    ``s_i`` is optional; it is only needed for :func:`lens_factor` and
    :func:`sigma_at_detector`. Sweeps over the detector beam size bypass it.
    """

    l_lm: float
    l_md: float
    a: float
    k0: float
    s_i: Optional[float] = None

    def __post_init__(self):
        for name in ("l_lm", "l_md", "a", "k0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")
        if self.s_i is not None and not math.isfinite(self.s_i):
            raise ValueError(f"s_i must be finite, got {self.s_i!r}")

    @property
    def l_im(self) -> float:
        """Lens image to moving mirror distance (signed)."""
        return self.l_lm + self._require_s_i()

    def _require_s_i(self) -> float:
        if self.s_i is None:
            raise ValueError("layout has no lens image distance s_i")
        if self.s_i == 0:
            raise ZeroDivisionError("lens image distance s_i is zero")
        return self.s_i


@dataclass(frozen=True)
class PiezoCalibration:
    """Linear piezo response [m/V] and mirror lever arm [m]."""

    response: float
    lever_arm: float

    def __post_init__(self):
        if not (self.response > 0 and math.isfinite(self.response)):
            raise ValueError(f"piezo response must be positive, got {self.response!r}")
        if not (self.lever_arm > 0 and math.isfinite(self.lever_arm)):
            raise ValueError(f"lever arm must be positive, got {self.lever_arm!r}")


def piezo_travel(drive_volts: float, cal: PiezoCalibration) -> float:
    """Linear actuator travel [m] for a drive voltage."""
    return drive_volts * cal.response


def mirror_angle(drive_volts: float, cal: PiezoCalibration) -> float:
    """Mirror tilt [rad] about the gimbal fulcrum."""
    return piezo_travel(drive_volts, cal) / cal.lever_arm


def momentum_kick(theta_mirror: float, k0: float) -> float:
    """Transverse kick [rad/m]; the beam turns through twice the mirror angle."""
    return 2.0 * theta_mirror * k0


def unamplified_deflection(k: float, l_md: float, k0: float) -> float:
    """Ray-optics deflection at the detector without interference, ``k l_md / k0``."""
    return k * l_md / k0


def drive_to_kick(drive_volts: float, cal: PiezoCalibration, k0: float) -> float:
    return momentum_kick(mirror_angle(drive_volts, cal), k0)


def lens_factor(layout: OpticalLayout) -> float:
    """Divergence enhancement ``l_im (l_im + l_md) / s_i^2``."""
    s_i = layout._require_s_i()
    l_im = layout.l_im
    return l_im * (l_im + layout.l_md) / s_i**2


def signed_sigma_at_detector(layout: OpticalLayout) -> float:
    s_i = layout._require_s_i()
    return layout.a * (layout.l_im + layout.l_md) / s_i


def sigma_at_detector(layout: OpticalLayout) -> float:
    """Beam size at the detector [m], ``|a (l_im + l_md) / s_i|``."""
    return abs(signed_sigma_at_detector(layout))


def pointer_shift_experimental(k: float, phi: float, sigma: float, layout: OpticalLayout) -> float:
    """Amplified detector-plane deflection [m] in terms of measurable sizes.

    ``2 k |A_w| (sigma^2 l_lm + sigma a l_md) / (l_lm + l_md)``

    Parameters
    ----------
    k : float
        Mirror kick [rad/m]. The result is linear (and odd) in ``k``.
    phi : float
        SBC phase [rad].
    sigma : float
        Beam size at the detector [m]. Must satisfy ``|sigma| >= a``; a
        negative value is only meaningful as the signed-lens intermediate.
    layout : OpticalLayout
    """
    if abs(sigma) < layout.a * (1.0 - 1e-12):
        raise ValueError(f"detector beam size {sigma!r} is smaller than the input size {layout.a!r}")
    geometry = (sigma**2 * layout.l_lm + sigma * layout.a * layout.l_md) / (layout.l_lm + layout.l_md)
    return 2.0 * k * weak_value_magnitude(phi) * geometry


def amplification_factor(pointer_shift: float, delta: float) -> float:
    """Ratio of the post-selected deflection to the unamplified one."""
    if delta == 0:
        raise ZeroDivisionError("unamplified deflection is zero")
    return pointer_shift / delta
