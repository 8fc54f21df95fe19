"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """A value handed to an operation is outside its domain (NaN, negative, ...)."""


class ConfigurationError(ValueError):
    """A parameter record or config file is invalid.

    ``key`` names the offending config key when the error comes from a file.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class DegenerateAttitudeError(ValueError):
    """Euler extraction requested too close to the +-90 deg pitch singularity."""


class NoAlignedSampleError(LookupError):
    """No buffered odometry sample lies close enough to a measurement timestamp."""


class DataError(ValueError):
    """Input log data is unusable (empty, too many malformed rows, ...)."""
