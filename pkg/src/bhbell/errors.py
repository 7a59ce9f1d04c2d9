"""Exception hierarchy shared by every module of the package."""


class BHBellError(Exception):
    """Base class for all package errors."""


class OutOfRangeMach(BHBellError, ValueError):
    pass


class KindMismatch(BHBellError, ValueError):
    pass


class NonPositiveFrequency(BHBellError, ValueError):
    pass


class ThresholdDegeneracy(BHBellError, ValueError):
    """Frequency too close to the threshold where two channels merge."""


class ModeAbsent(BHBellError, ValueError):
    """Requested channel does not exist at this frequency (e.g. partner above threshold)."""


class MatchingSingular(BHBellError, ArithmeticError):
    pass


class NoConvergence(BHBellError, ArithmeticError):
    pass


class FitRange(BHBellError, ValueError):
    pass


class PhysicalityViolation(BHBellError, ValueError):
    pass


class TruncationTooSmall(BHBellError, ArithmeticError):
    pass


class QuadratureFailure(BHBellError, ArithmeticError):
    pass


class NotConverged(BHBellError, ArithmeticError):
    """Optimizer stopped before meeting its convergence rule.

    The best-so-far result is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
