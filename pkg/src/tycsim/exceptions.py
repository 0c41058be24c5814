"""Exception hierarchy shared by the library and the command line."""


class TycError(Exception):
    """Base class for all errors raised by tycsim."""

    exit_code = 1


class ConfigError(TycError, ValueError):
    """A configuration document could not be parsed or failed validation."""

    exit_code = 2


class ParameterError(ConfigError):
    """One or more model hypotheses are violated.

    ``violations`` holds one ``Violation`` per failed check so callers can
    report every offending field at once.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class NumericalFailure(TycError, RuntimeError):
    """Non-finite values, solver breakdown, or other numerical failure."""

    exit_code = 3


class InvariantViolation(TycError, RuntimeError):
    """A modified-model run left the band [0, K]."""

    exit_code = 4

    def __init__(self, message, event=None):
        super().__init__(message)
        self.event = event


class NoTransitionError(TycError, ValueError):
    """A bifurcation sweep did not bracket a transition."""

    exit_code = 3
