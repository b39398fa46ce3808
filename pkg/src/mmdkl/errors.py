"""Exception types shared across the package."""


class MmdKlError(Exception):
    """Base class for all errors raised by mmdkl."""

    exit_code = 1


class InputError(MmdKlError, ValueError):
    """Invalid arguments: bad shapes, out-of-range parameters, unparsable files."""

    exit_code = 2


class NumericalError(MmdKlError, ArithmeticError):
    """A computation broke down (failed factorization, impossible negative value)."""

    exit_code = 3


class VerificationError(MmdKlError):
    """An inequality that must hold was violated."""

    exit_code = 4
