"""Exception hierarchy.

Every error raised by the package derives from :class:`CodaError`, which is
itself a ``ValueError`` so callers that only care about bad input can catch
the builtin.
"""


class CodaError(ValueError):
    pass


class NonPositiveEntry(CodaError):
    """A zero or negative value reached closure or a log transform."""


class ZeroEntry(NonPositiveEntry):
    """An unimputed count zero reached the log of the basis."""


class DimensionTooSmall(CodaError):
    pass


class NotClosed(CodaError):
    """Rows of a composition do not sum to one within tolerance."""


class BadReferenceIndex(CodaError):
    pass


class OverflowRisk(CodaError):
    pass


class TooFewSamples(CodaError):
    pass


class ShapeMismatch(CodaError):
    pass


class SingularCovariance(CodaError):
    pass


class RepresentationMismatch(CodaError):
    pass


class LambdaOutOfRange(CodaError):
    pass


class NonPositiveAlpha(CodaError):
    pass


class NotPositiveDefinite(CodaError):
    pass


class PairRemoved(CodaError):
    pass


class EmptyRow(CodaError):
    pass


class DeltaOutOfRange(CodaError):
    pass


class RowTotalTooSmall(CodaError):
    pass


class InsufficientZeroFreeRows(CodaError):
    pass
