"""Exception types shared across the package."""


class SparseError(Exception):
    """Base class for all library errors."""


class BoundsError(SparseError, IndexError):
    """An element index lies outside the matrix."""


class DimensionMismatch(SparseError, ValueError):
    """Operand shapes are incompatible for the requested operation."""


class InvariantError(SparseError, AssertionError):
    """A storage object violates one of its structural invariants."""
