"""Standing-wave profile construction and non-degeneracy certification tools."""

__version__ = "0.1.0"

from .errors import (
    ConvergenceError,
    CrossCheckError,
    DomainError,
    ResonanceError,
    WavebifError,
)

__all__ = [
    "__version__",
    "WavebifError",
    "DomainError",
    "ConvergenceError",
    "ResonanceError",
    "CrossCheckError",
]
