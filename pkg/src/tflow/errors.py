"""Exception hierarchy shared by every tflow module."""


class TflowError(Exception):
    """Base class for all errors raised by tflow."""


class ConfigurationError(TflowError, ValueError):
    """Invalid grid, material, stepper or run configuration.

    ``key`` names the offending configuration entry when one is known;
    ``problems`` lists every ``(key, message)`` pair when several were found.
    """

    def __init__(self, message, key=None, problems=None):
        super().__init__(message)
        self.key = key
        self.problems = list(problems) if problems else [(key, message)]


class RepresentationError(TflowError, TypeError):
    """A field was handed over in the wrong representation or on another grid."""


class PositivityError(TflowError, ArithmeticError):
    """Temperature reached a non-positive value where positivity is required."""


class StepFailure(TflowError, RuntimeError):
    """Time stepping could not restore positivity after repeated halvings."""

    def __init__(self, message, state=None, t=None):
        super().__init__(message)
        self.state = state
        self.t = t
