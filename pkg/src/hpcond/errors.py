"""Exception types shared across the package."""


class HpcondError(Exception):
    """Base class for all package errors."""


class InputError(HpcondError, ValueError):
    """Invalid argument, out-of-domain value, or malformed input file."""


class NumericalError(HpcondError, ArithmeticError):
    """A numerical procedure failed (singular system, non-finite result)."""
