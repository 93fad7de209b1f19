"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: configuration/parameter problems -> 2,
data-format problems -> 3, numerical failures -> 4.
"""


class PhonodotError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(PhonodotError, ValueError):
    """A physical parameter or argument violates its preconditions."""


class ConfigError(PhonodotError, ValueError):
    """A run configuration is missing fields or fails validation."""


class FormatError(PhonodotError, ValueError):
    """An input data file does not match the documented format."""


class IntegrationError(PhonodotError, RuntimeError):
    """The ODE integrator failed to meet its tolerance."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ConvergenceError(PhonodotError, RuntimeError):
    """An iterative procedure (steady state, fixed point) did not settle."""


class AnalysisError(PhonodotError, RuntimeError):
    """A post-processing step (fit, feature extraction) failed."""


class FitError(AnalysisError):
    """A least-squares fit failed or the data are degenerate."""
