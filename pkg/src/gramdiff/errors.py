"""Exception types shared across the package."""


class GramDiffError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(GramDiffError, ValueError):
    """Matrix dimensions are inconsistent with the requested operation."""


class ConvergenceError(GramDiffError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class ConfigError(GramDiffError, ValueError):
    """Invalid configuration value or combination."""


class PreconditionError(GramDiffError, ValueError):
    """A documented precondition of an operation was violated."""


class DegenerateStatisticsError(GramDiffError, ValueError):
    """Sample statistics are degenerate (e.g. zero variance)."""


class InsufficientDataError(GramDiffError, ValueError):
    """Not enough observations to form the requested estimate."""


class DegenerateNoiseError(GramDiffError, ValueError):
    """Noise variance is zero where a noise-normalized quantity is needed."""


class DataFormatError(GramDiffError, ValueError):
    """A binary file does not conform to its documented layout."""


class DivergenceError(GramDiffError, RuntimeError):
    """A reverse-diffusion trajectory produced a non-finite value.

    Carries the step index at which the divergence was detected.
    """

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite state at reverse step t={step}")
