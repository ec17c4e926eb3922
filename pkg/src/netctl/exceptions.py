"""Exception hierarchy shared by every netctl module."""


class NetctlError(Exception):
    """Base class for all errors raised by netctl."""


class ParameterError(NetctlError, ValueError):
    """Invalid argument value (probability outside [0, 1], empty interval, ...)."""


class FormatError(NetctlError, ValueError):
    """Malformed edge-list, JSON or configuration payload."""


class PreconditionError(NetctlError, ValueError):
    """A documented precondition of the operation does not hold."""


class DegenerateDecompositionError(NetctlError):
    """The controllable subspace is empty (rank zero)."""


class NotControllableError(NetctlError):
    """Target Gramian is singular: the targets cannot be steered at this horizon."""


class DegenerateSpectrumError(NetctlError):
    """Repeated eigenvalues make a closed-form expression undefined."""


class DecompositionConditioningError(NetctlError):
    """The target rows of the controllable basis are not invertible."""


class NumericalError(NetctlError, ArithmeticError):
    """A quantity that must be non-negative came out negative beyond tolerance."""


class RangeError(NetctlError, OverflowError):
    """Gramian entries would overflow double precision at this horizon."""


class RecipeError(NetctlError):
    """An experiment recipe was asked to run on an unsuitable system."""


class ConfigError(NetctlError):
    """Experiment configuration is missing, unreadable or inconsistent."""
