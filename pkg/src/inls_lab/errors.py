"""Exception hierarchy shared by all modules."""


class InlsError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(InlsError, ValueError):
    """A parameter lies outside its admissible range."""


class DomainMismatchError(InlsError, ValueError):
    """Two objects live on different grids."""


class UnderResolutionError(InlsError, RuntimeError):
    """The grid or time step cannot represent the computed state."""


class UnresolvedSingularityError(UnderResolutionError):
    """The adaptive step fell below its floor before the blow-up cap was reached.

    The partial log and report are attached so callers can flag the run.
    """

    def __init__(self, message, field=None, log=None, report=None):
        super().__init__(message)
        self.field = field
        self.log = log
        self.report = report


class NoBracketError(InlsError, RuntimeError):
    """Shooting could not bracket a decaying ground state."""


class DomainTooSmallError(InlsError, RuntimeError):
    """Mass reached the outer wall, so reflections contaminate the result."""


class DiagnosticError(InlsError, RuntimeError):
    """A diagnostic is undefined for the supplied input."""


class ConfigError(InlsError, ValueError):
    """A run configuration could not be parsed or validated."""
