"""Exception hierarchy shared by the simulator modules and the CLI."""


class SenrecError(Exception):
    """Base class for every error raised by this package."""


class NormalizationError(SenrecError, ValueError):
    """A payload cannot be encoded into a normalized single-excitation state."""


class ConstraintConflictError(SenrecError, ValueError):
    """Two constraints claim the same row of a partially specified unitary."""


class ValidationError(SenrecError):
    """Constrained rows are not orthonormal, so no unitary completion exists."""


class SingularMatrixError(SenrecError, ArithmeticError):
    """The matrix (or its extracted determinant element) is numerically zero."""


class DegenerateDecodeError(SenrecError, ArithmeticError):
    """A decode constant is too close to zero to divide by."""


class SystemSizeError(SenrecError):
    """The dense engine was asked to materialize more qubits than its cap."""
