"""Exception types raised across the package."""


class ConclabError(Exception):
    """Base class for all library errors."""


class NonConvergence(ConclabError, ArithmeticError):
    pass


class ZeroMatrix(ConclabError, ValueError):
    pass


class RankDeficient(ConclabError, ValueError):
    pass


class DimensionTooLarge(ConclabError, ValueError):
    pass


class DimensionMismatch(ConclabError, ValueError):
    pass


class NonSquare(ConclabError, ValueError):
    pass


class TooLarge(ConclabError, ValueError):
    pass


class EmptyInput(ConclabError, ValueError):
    pass


class NoUsablePoints(ConclabError, ValueError):
    pass


class Overflow(ConclabError, OverflowError):
    pass
