"""Approximate spectral clustering on a Growing Neural Gas, with image segmentation"""

__version__ = "0.1.0"

from spectral_gng.config import GngParams, RunConfig  # noqa: E402
from spectral_gng.errors import (  # noqa: E402
    DimensionMismatchError, InputError, NumericError, ParseError, SpectralGngError, StageError,
)

__all__ = [
    "__version__",
    "GngParams",
    "RunConfig",
    "SpectralGngError",
    "InputError",
    "ParseError",
    "DimensionMismatchError",
    "NumericError",
    "StageError",
]
