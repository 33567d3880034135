"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input data (bad vertex ids, negative weights, ...)."""


class ConfigError(ValueError):
    """Inconsistent run configuration (e.g. tau above the exact-cut limit)."""


class BuildFailure(RuntimeError):
    """A tree construction aborted (merge mismatch or repeated root recursion).

    Carries the build trace collected up to the failure point.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
