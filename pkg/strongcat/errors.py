"""
Custom exception classes for strongcat.
"""


class StrongCatError(Exception):
    """Base exception for all strongcat errors."""
    pass


class ConfigurationError(StrongCatError):
    """Raised when a configuration file or section is invalid."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        super().__init__(message)
        self.field = field
        self.line = line


class ValidationError(StrongCatError):
    """Raised when input validation fails."""
    pass


class MissingInputError(StrongCatError):
    """Raised when an upstream artifact required by a command is absent."""
    pass


class NumericalError(StrongCatError):
    """Base class for failures of a numerical kernel."""
    pass


class TruncationTooSmallError(NumericalError):
    """Raised when a Fock truncation leaks more probability than allowed."""
    pass


class DegenerateSuperpositionError(NumericalError):
    """Raised when a coherent-state superposition has (numerically) zero norm."""
    pass


class ZeroMeanPhotonError(NumericalError):
    """Raised when a photon statistic needs a nonzero mean photon number."""
    pass


class ZeroFieldError(NumericalError):
    """Raised when a quantity is undefined for a vanishing laser field."""
    pass


class NoReturnsError(NumericalError):
    """Raised when a classical trajectory never returns to the parent ion."""
    pass


class GridTooCoarseError(NumericalError):
    """Raised when a time grid undersamples the harmonic cutoff."""
    pass


class NyquistViolationError(NumericalError):
    """Raised when a requested harmonic lies above the Nyquist frequency of the dipole grid."""
    pass


class NullConditioningError(NumericalError):
    """Raised when a conditioning projector annihilates the state."""
    pass


class ConvergenceFailureError(NumericalError):
    """Raised when a discretization refinement does not converge."""
    pass


class IllConditionedError(NumericalError):
    """Raised when likelihood probabilities underflow after bin merging."""
    pass


class NonConvergenceError(NumericalError):
    """Raised when an iterative reconstruction reaches max_iter."""
    pass


class InsufficientPhasesError(NumericalError):
    """Raised when a homodyne trace has too few phases for reconstruction."""
    pass


class EmptySelectionError(NumericalError):
    """Raised when a shot selection retains nothing."""
    pass
