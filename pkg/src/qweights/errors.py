"""Exception types shared across the package."""

from __future__ import annotations


class QWeightsError(Exception):
    """Base class for all package-specific errors."""


class NotHermitianError(QWeightsError):
    pass


class NotCPError(QWeightsError):
    pass


class NotInRangeError(QWeightsError):
    pass


class DegenerateRangeError(QWeightsError):
    pass


class NumericalDegeneracyError(QWeightsError):
    pass


class PreconditionViolatedError(QWeightsError):
    pass


class IndexOutOfRangeError(QWeightsError):
    pass


class DimensionMismatchError(QWeightsError):
    pass


class DivergentCrossError(QWeightsError):
    """A non-positive combination of profile pairings diverges at the origin."""


class UnsupportedProfileError(QWeightsError):
    pass


class UnsupportedWeightComparisonError(QWeightsError):
    """Neither the exact coefficient rule nor sampling can decide a weight inequality."""


class SingularSystemError(QWeightsError):
    """det(I + X(t)) vanished; the truncated system cannot be inverted."""


class MisalignedError(QWeightsError):
    """U does not intertwine the two projections of a corner candidate."""


class NotSquareSummableError(QWeightsError):
    """A corner correction function fails square-integrability."""


class NotDominatedError(QWeightsError):
    pass


class NotTrivialSpineError(QWeightsError):
    pass


class NotConvergedError(QWeightsError):
    pass


class RankMismatchError(QWeightsError):
    pass


class IllDefinedHError(QWeightsError):
    """1 + tau|_t(Lambda(Q)) vanished somewhere on the grid."""


class InputError(QWeightsError):
    """Malformed input file or spec (CLI exit code 3)."""
