"""Exception types."""


class WicksellError(Exception):
    """Base class for package errors."""


class NumericalError(WicksellError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class InputError(WicksellError, ValueError):
    """Malformed or unusable input data."""
