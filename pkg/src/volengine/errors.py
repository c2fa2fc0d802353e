"""Exception hierarchy.

Every error raised by the package derives from :class:`VolEngineError`. The two
intermediate classes decide the CLI exit code: :class:`DataError` (bad or
insufficient input, exit 2) and :class:`NumericalError` (a computation that
could not be completed, exit 3).
"""


class VolEngineError(Exception):
    """Base class for all package errors."""


class DataError(VolEngineError, ValueError):
    """Input data violates a documented invariant or precondition."""


class NumericalError(VolEngineError, ArithmeticError):
    """A numerical procedure failed on otherwise valid input."""


class MalformedRow(DataError):
    pass


class DuplicateDate(DataError):
    pass


class NonPositivePrice(DataError):
    pass


class CrossedQuote(DataError):
    pass


class NegativeOpenInterest(DataError):
    pass


class ExpiryBeforeQuote(DataError):
    pass


class DuplicateQuote(DataError):
    pass


class EmptyWindow(DataError):
    pass


class InvalidSpec(DataError):
    pass


class TooFewObservations(DataError):
    pass


class WindowTooLarge(DataError):
    pass


class ZeroVariance(DataError):
    pass


class DegenerateSeries(DataError):
    pass


class InvalidTransition(DataError):
    pass


class ReducibleChain(DataError):
    pass


class NoQuotesForDate(DataError):
    pass


class InsufficientDates(DataError):
    pass


class MissingSpot(DataError):
    pass


class SingularRegression(NumericalError):
    pass


class NonPositiveVariance(NumericalError):
    pass


class ExplosiveModel(NumericalError):
    pass


class SingularHessian(NumericalError):
    pass


class NegativeLR(NumericalError):
    pass
