"""Exception hierarchy shared by the library and mapped to CLI exit codes."""


class MinResistError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class DomainError(MinResistError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class InputError(MinResistError, ValueError):
    """Malformed kernel table, body file or command-line input."""

    exit_code = 2


class ParameterError(MinResistError, ValueError):
    """A construction parameter violates a stated precondition.

    ``constraint`` names the binding condition so callers can report it.
    """

    exit_code = 3

    def __init__(self, message, constraint=None):
        super().__init__(message)
        self.constraint = constraint


class RegimeError(MinResistError):
    """The requested height lies outside the regime handled by the operation."""

    exit_code = 3


class RegularityError(MinResistError):
    """Too many rays failed to leave the body (trapped or over the bounce cap)."""

    exit_code = 4

    def __init__(self, message, xs=()):
        super().__init__(message)
        self.xs = tuple(xs)


class NumericError(MinResistError, ArithmeticError):
    """A numerical procedure failed to converge or to bracket a root."""

    exit_code = 1
