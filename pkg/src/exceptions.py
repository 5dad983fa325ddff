"""
Error hierarchy.
Domain errors map to exit status 2, numerical failures to 3, bad input files to 65.
"""
from typing import Any, Dict, Optional


class DrspherError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        if not self.details:
            return self.message
        extra = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
        return f"{self.message} ({extra})"


class ParameterDomainError(DrspherError):
    """Input outside the mathematical domain of an operation"""

    exit_code = 2


class StripViolationError(ParameterDomainError):
    """Complex spectral parameter outside the supported strip"""


class DecayError(ParameterDomainError):
    """Radial profile does not decay fast enough for the requested transform"""


class GridMismatchError(ParameterDomainError):
    """Two spectral objects live on incompatible grids"""


class NotCertifiedError(ParameterDomainError):
    """Operation needs a candidate that passed certification"""


class NumericalError(DrspherError):
    """A numerical routine failed to meet its contract"""

    exit_code = 3


class QuadratureError(NumericalError):
    pass


class TruncationError(NumericalError):
    """Mass beyond the end of a grid exceeds the allowed fraction"""


class ConvergenceError(NumericalError):
    """Iterative solver or ODE integrator did not converge"""


class CalibrationError(NumericalError):
    pass


class DeconvolutionError(NumericalError):
    """Nonnegative deconvolution residual above tolerance"""


class MalformedInputError(DrspherError):
    """Input file could not be parsed"""

    exit_code = 65
