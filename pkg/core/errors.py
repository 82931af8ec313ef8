"""
Exception hierarchy for the pricer

Every failure raised by library code derives from PricerError so the
command line layer can report it as a single line and exit nonzero.
"""


class PricerError(Exception):
    """Base class for all pricer failures"""


class ValidationError(PricerError):
    """A model parameter, domain or control interval violates its invariants"""


class DomainError(PricerError):
    """A point or argument lies outside the admissible coordinate range"""


class MeshError(PricerError):
    """Degenerate geometry or inconsistent triangulation"""


class AssemblyError(PricerError):
    """The discrete operator could not be built with the required sign structure"""


class SolverError(PricerError):
    """A linear solve failed or returned an inaccurate solution"""

    def __init__(self, message, step=None, residual=None):
        super().__init__(message)
        self.step = step
        self.residual = residual


class HowardConvergenceError(SolverError):
    """Policy iteration did not settle within the iteration limit"""


class QuadratureError(PricerError):
    """Adaptive Fourier integration did not converge"""
