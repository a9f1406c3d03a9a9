"""Interferometric weak-value amplification of beam deflections."""

from weakamp.beamgeom import (
    OpticalLayout,
    PiezoCalibration,
    amplification_factor,
    lens_factor,
    mirror_angle,
    momentum_kick,
    piezo_travel,
    pointer_shift_experimental,
    sigma_at_detector,
    unamplified_deflection,
)
from weakamp.errors import (
    ClippingError,
    ConfigError,
    DegeneratePostSelectionError,
    GridExtentError,
    InsufficientDurationError,
    NyquistError,
    WeakAmpError,
    WeakRegimeWarning,
)
from weakamp.scenario import Scenario, emit_scenario, load_preset, parse_scenario
from weakamp.weakcore import (
    GaussianMeter,
    Interaction,
    SystemState,
    pointer_shift_collimated,
    postselected_state,
    postselection_probability,
    preselected_state,
    weak_value,
)

__version__ = "0.1.0"
