"""Exception hierarchy shared by the library and the command line runner."""


class SLHError(Exception):
    """Base class for all errors raised by :mod:`slhequiv`."""


class DimensionMismatch(SLHError, ValueError):
    """Operands do not share system dimension or channel multiplicity."""


class ValidationError(SLHError, ValueError):
    """A model or operator violates a structural constraint (unitarity, Hermiticity)."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


class NumericalBreakdown(SLHError, ArithmeticError):
    """A computed quantity left its admissible range by more than rounding can explain."""
