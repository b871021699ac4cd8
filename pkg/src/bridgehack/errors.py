"""Exception hierarchy shared by every bridgehack module."""


class BridgeHackError(Exception):
    """Base class for all errors raised by bridgehack."""


class InvalidInput(BridgeHackError, ValueError):
    """An argument fails validation (shape, normalisation, sign, range)."""


class NotHermitian(InvalidInput):
    pass


class NotDecoherent(InvalidInput):
    pass


class DimensionTooLarge(InvalidInput):
    pass


class SupportViolation(InvalidInput):
    pass


class DivisionSingularity(BridgeHackError, ArithmeticError):
    """A nonzero entry was divided by (numerically) zero.

    For stochastic maps this means the Bayes inverse is undefined for the
    requested prior.
    """


class RankDeficient(BridgeHackError, ArithmeticError):
    """A matrix inverse (square root) was requested below the eigenvalue floor."""
