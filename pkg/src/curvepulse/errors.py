"""Exception hierarchy shared across the package.

The CLI maps InputError to exit code 2 and ConvergenceError to exit code 3.
"""


class CurvePulseError(Exception):
    """Base class for all package errors."""


class InputError(CurvePulseError, ValueError):
    """Invalid argument, malformed file, or contract violation by the caller."""


class ConvergenceError(CurvePulseError, RuntimeError):
    """A numerical procedure failed to reach its requested tolerance."""


class NoSolutionError(ConvergenceError):
    """A scalar solve found no bracket in the requested range."""

    def __init__(self, message, params=None, distances=None):
        super().__init__(message)
        self.params = list(params) if params is not None else []
        self.distances = list(distances) if distances is not None else []
