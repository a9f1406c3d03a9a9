"""Exception types shared across the package."""


class WeakAmpError(Exception):
    """Base class for every error raised by weakamp."""


class DegeneratePostSelectionError(WeakAmpError, ValueError):
    """The pre- and post-selected states are orthogonal (perfect dark port)."""


class GridExtentError(WeakAmpError, ValueError):
    """A sampling grid is too short or too narrow for the beam it must hold."""


class ClippingError(WeakAmpError, ValueError):
    """The beam overfills the detector active area."""


class NyquistError(WeakAmpError, ValueError):
    pass


class InsufficientDurationError(WeakAmpError, ValueError):
    pass


class ConfigError(WeakAmpError, ValueError):
    """Scenario text failed to parse or validate.

    ``location`` names the offending field path (``geometry.l_md``) or the
    JSON line/column when the text itself is malformed.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{location}: {message}"
        super().__init__(message)


class WeakRegimeWarning(UserWarning):
    """The first-order weak-value expansion is being used outside its domain."""
