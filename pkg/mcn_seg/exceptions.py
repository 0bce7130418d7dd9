"""Exception hierarchy for mcn-seg.

Every exception carries the process exit code the CLI reports for it:
1 for usage, configuration and I/O problems, 2 for numerical failures.
"""

from __future__ import annotations


class MCNError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class ConfigError(MCNError, ValueError):
    """Invalid, inconsistent or missing configuration."""


class ShapeMismatchError(MCNError, ValueError):
    """Tensor shapes (or channel counts) do not agree."""

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        if shapes:
            rendered = " vs ".join(str(tuple(s)) for s in shapes)
            message = f"{message}: {rendered}"
        super().__init__(message)
        self.shapes = shapes


class UnsupportedKernelError(MCNError, ValueError):
    """Convolution kernel size outside {1, 3}."""


class StatisticsError(MCNError, RuntimeError):
    """A statistic was requested before any data was accumulated."""


class LatticeError(MCNError, ValueError):
    """Permutohedral lattice construction or filtering failure."""


class DatasetError(MCNError, ValueError):
    """Synthetic data or label alphabet problem."""


class TensorFormatError(MCNError, ValueError):
    """Malformed MCNT tensor file."""


class CheckpointError(MCNError, ValueError):
    """Checkpoint directory missing, incomplete or incompatible."""


class NumericalError(MCNError, ArithmeticError):
    """Non-finite values where finite ones are required."""

    exit_code = 2

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration


class GradientCheckError(NumericalError):
    """Finite-difference check hit a non-finite intermediate."""
