"""Exception types raised across the package."""


class RCQMEError(Exception):
    """Base class for all package errors."""


class DomainError(RCQMEError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ParameterError(RCQMEError, ValueError):
    """Invalid model or configuration parameter."""


class DimensionError(RCQMEError, ValueError):
    """Array shapes that do not fit together."""


class ResourceError(RCQMEError, MemoryError):
    """Requested representation would be too large to materialize."""


class NumericalError(RCQMEError, RuntimeError):
    """Base class for failures of a numerical routine."""


class ConvergenceError(NumericalError):
    """Quadrature did not reach the requested tolerance.

    ``estimate`` holds the achieved absolute error estimate.
    """

    def __init__(self, message, estimate=float("nan"), value=float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.value = value


class IntegrationError(NumericalError):
    """Time propagation lost accuracy (trace drift above threshold)."""


class ConfigError(ParameterError):
    """Run configuration failed validation; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))
