"""Exception types shared by the library and mapped to CLI exit codes."""


class QetError(Exception):
    """Base class for library errors."""


class ValidationError(QetError, ValueError):
    """Bad input: violated precondition, malformed operator, unknown option."""


class NumericalError(QetError, ArithmeticError):
    """A numerical procedure failed to converge or meet its tolerance."""
