"""Exception types shared across the package.

The CLI maps these onto exit codes: input/validation problems exit 2,
numerical failures exit 3.
"""


class ClusterCritError(Exception):
    """Base class for all errors raised by this package."""


class SchemaError(ClusterCritError):
    """A required column is missing from an input file."""


class ParseError(ClusterCritError):
    """A cell in an input file could not be parsed; message names the row."""


class ValidationError(ClusterCritError):
    """Inputs violate a documented precondition or invariant."""


class ConfigError(ClusterCritError):
    """Inconsistent or incomplete run configuration."""


class RankError(ClusterCritError):
    """The pooled Gram matrix is numerically singular.

    ``null_direction`` holds the offending unit vector in regressor space.
    """

    def __init__(self, message, null_direction=None):
        super().__init__(message)
        self.null_direction = null_direction


class DegenerateVarianceError(ClusterCritError):
    """The cluster-robust variance estimate is exactly zero."""


class DesignError(ClusterCritError):
    """A simulated design violates its own construction guarantees."""
