"""Shared exception types.

The library keeps two failure modes strictly apart: a *domain* error means
the requested value does not exist (inverting an exact zero, taking the
valuation of the zero element, mismatched towers), while a *precision*
error means the value may exist but the stored digits cannot certify it.
Callers that want to retry at higher precision should catch PrecisionError
only.
"""


class HlfError(Exception):
    """Base class for all library errors."""


class PrecisionError(HlfError):
    """The stored precision is insufficient to certify the result."""


class TowerMismatchError(HlfError):
    """Operands live in different towers (or wrong residue tower)."""


class WindowInstabilityError(HlfError):
    """A truncated computation failed to stabilise below the window cap."""
