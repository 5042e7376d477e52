"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes so automation can tell a bad
invocation (1) from an inconclusive experiment (2) from a numerical
failure (3).
"""


class ValidationError(ValueError):
    """A parameter or input violates its contract (exit code 1)."""


class InconclusiveError(RuntimeError):
    """A detection or experiment could not reach a verdict (exit code 2)."""


class ExperimentInconclusiveError(InconclusiveError):
    """A rate experiment produced an unusable fit; carries the data."""

    def __init__(self, message, fit=None):
        super().__init__(message)
        self.fit = fit


class NumericalError(RuntimeError):
    """An internal numerical failure (exit code 3)."""


class DivergedRunError(NumericalError):
    """A trajectory breached the divergence guard (dt too large)."""


class CflError(NumericalError):
    """Explicit drift step violates the CFL bound; reduce dt."""
