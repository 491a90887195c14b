"""Exception hierarchy shared by all modules."""


class ResonantNLSError(Exception):
    """Base class for errors raised by this package."""


class StructuralError(ResonantNLSError, ValueError):
    """Malformed input: incompatible lattices, bad mode lists, bad subgraphs."""


class DiophantineViolation(ResonantNLSError, ArithmeticError):
    """A small divisor vanished or fell below the admissible threshold.

    ``witness`` holds the offending lattice tuple, e.g. ``(n, m)``.
    """

    def __init__(self, message, witness=None, condition=None):
        super().__init__(message)
        self.witness = witness
        self.condition = condition


class ExcludedEpsilon(DiophantineViolation):
    """The requested epsilon lies in an excised resonance window."""


class ConvergenceError(ResonantNLSError, RuntimeError):
    """Newton or fixed-point iteration failed to converge."""


class InsufficientData(ResonantNLSError, ValueError):
    """Too few usable points for a fit."""


class InternalContradiction(ResonantNLSError, RuntimeError):
    """A search that is guaranteed to succeed came back empty."""
