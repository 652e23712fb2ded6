"""Exception types raised across the simulator."""


class QuadsimError(Exception):
    """Base class for all simulator errors."""


class SingularAttitude(QuadsimError, ValueError):
    """Pitch angle is inside the gimbal-lock guard band around +/-90 deg."""


class NoSettle(QuadsimError):
    """A response never entered its settling band."""


class DegenerateFiring(QuadsimError, ValueError):
    """Total rule firing strength of a fuzzy model vanished."""


class SingularLSQ(QuadsimError):
    """Consequent least-squares regressor matrix is rank deficient."""


class InvalidRange(QuadsimError, ValueError):
    """An input column has zero spread, so membership functions cannot be placed."""


class ScenarioDiverged(QuadsimError):
    """A simulated run left its admissible state bounds."""


class OutOfWindow(QuadsimError, ValueError):
    """Time argument outside the window a profile is defined on."""


class ParseError(QuadsimError, ValueError):
    """Malformed configuration or model file."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(QuadsimError, ValueError):
    """A configured value violates its invariant."""
