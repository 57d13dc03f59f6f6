"""Shared exception and warning types."""


class DegenerateNoiseError(ValueError):
    """An operation was requested at a noise level where it is undefined."""


class DivergentTiltError(ValueError):
    """The tilt shift has no finite value at the requested corner.

    The only such corner is a pure linear tilt (v != 0, s = 0) at sigma = 1:
    the location shift scales like sigma^2 / sqrt(1 - sigma^2).
    """


class ConfigError(ValueError):
    """A config file or serialized object was rejected.

    Carries the field path (dotted, e.g. "tilt.s") so callers can point at
    the offending entry.
    """

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class BoundaryMassWarning(RuntimeWarning):
    """The integration box is too small for the requested integrand.

    Emitted when the boundary nodes of a quadrature grid carry more than a
    negligible fraction of the total mass; results are still returned but
    should not be trusted to tolerance.
    """
