"""Exception hierarchy for the scw_cvqkd package.

Every error raised deliberately by this package derives from :class:`ScwError`
so callers can catch the whole family with one clause.  ``ValueError`` is mixed
into the input-validation errors so that generic validation handling keeps
working.
"""


class ScwError(Exception):
    """Base class for all package errors."""


class DomainError(ScwError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(ScwError, ValueError):
    """A configuration file or CLI argument set is malformed or inconsistent."""


class InternalError(ScwError):
    """A self-check failed; indicates numerical instability or a bug."""


class DegenerateError(ScwError):
    """A quantity required by the model vanished (no local oscillator,
    no acceptance mass, ...) so the requested value is undefined."""


class NoRootError(ScwError):
    """A calibration root search found no sign change in its bracket."""


class EmptyAcceptanceError(ScwError):
    """The post-selection region carries (numerically) zero probability."""


class InfeasibleError(ScwError):
    """No positive key rate exists anywhere on the searched grid.

    Carries the best diagnostics found so the caller can report them.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class MismatchError(ScwError):
    """Monte Carlo statistics disagree with the analytic prediction."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
