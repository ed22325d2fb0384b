"""Exception and warning types shared across the package."""


class QspecError(Exception):
    """Base class for all package-specific failures."""


class DimensionMismatch(QspecError):
    """Operands act on different Hilbert spaces."""


class NonHermitianInput(QspecError):
    """A matrix that must be Hermitian is not, beyond tolerance."""


class NonDiagonalizable(QspecError):
    """Channel eigenvector matrix too ill-conditioned to invert."""


class OutOfRange(QspecError):
    """A scalar argument lies outside its documented domain."""


class InvalidState(QspecError):
    """A density matrix lost trace, positivity, or Hermiticity."""


class TruncationInsufficient(QspecError):
    """Fock-space cutoff leaves more thermal weight outside than allowed."""


class DimensionTooLarge(QspecError):
    """Requested dense model exceeds the supported Hilbert-space size."""


class InconsistentSpec(QspecError):
    """A specification supplies conflicting redundant fields."""


class OddPulseCount(QspecError):
    """CPMG pulse trains require an even number of pulses."""


class EmptyInput(QspecError):
    """A collection argument that must be non-empty is empty."""


class EmptySeries(QspecError):
    """A correlation series with no samples cannot be transformed."""


class GridMismatch(QspecError):
    """Two spectra live on different frequency grids."""


class ConfigError(QspecError):
    """An experiment configuration file is malformed or incomplete."""


class WeakMeasurementViolation(UserWarning):
    """The weak-measurement condition tau1*||A|| <= threshold is violated.

    Warning-level on purpose: perturbative formulas are still evaluated,
    they just lose accuracy.
    """
