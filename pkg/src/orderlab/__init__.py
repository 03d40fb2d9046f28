"""Wave-mechanical limits on detecting the order and coincidence of arrivals.

Modules
-------
specfun      Bessel, Hankel and complex error functions.
halfplane    Knife-edge diffraction (order-of-arrival detector).
disk         Hard-disk partial waves (coincidence detector).
dynamics     Two-body wavepackets on a grid, ADI Crank-Nicolson.
experiments  Parameter sweeps and the bound report.
cli          Command-line entry point.
"""

from .errors import (
    AccuracyWarning,
    BoundaryZoneError,
    DomainError,
    NumericalError,
    PoleError,
    RegimeError,
    ReportIncomplete,
    TruncationWarning,
)
from .io import package_version

__version__ = package_version()

__all__ = [
    "AccuracyWarning",
    "BoundaryZoneError",
    "DomainError",
    "NumericalError",
    "PoleError",
    "RegimeError",
    "ReportIncomplete",
    "TruncationWarning",
    "__version__",
]
