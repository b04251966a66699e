"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code should raise
the most specific type that applies rather than bare ValueError/RuntimeError.
"""


class WavebifError(Exception):
    """Base class for all package-specific failures."""


class DomainError(WavebifError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class ConvergenceError(WavebifError, RuntimeError):
    """An iteration failed to reach its tolerance, or a resolution is too coarse."""


class ResonanceError(WavebifError, RuntimeError):
    """A near-resonant divisor fell below the abort threshold.

    Carries the offending mode pair so callers can report it.
    """

    def __init__(self, message: str, mode_pair: tuple[int, int], divisor: float):
        super().__init__(message)
        self.mode_pair = mode_pair
        self.divisor = divisor


class CrossCheckError(WavebifError, RuntimeError):
    """Two independent computations of the same quantity disagree.

    Raised instead of returning silently wrong certificates.
    """
