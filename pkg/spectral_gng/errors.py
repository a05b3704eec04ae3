# spectral_gng/errors.py
# Exception hierarchy shared by the library and the CLI

from typing import Optional


class SpectralGngError(Exception):
    """Base class for every error raised by spectral_gng."""


class InputError(SpectralGngError, ValueError):
    """Invalid arguments or data handed to an operation."""


class ParseError(InputError):
    """Malformed input file. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ""
        if path:
            location += f"{path}"
        if line is not None:
            location += f":{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class DimensionMismatchError(InputError):
    """Two inputs that must share a shape do not."""


class NumericError(SpectralGngError, ArithmeticError):
    """Iterative numeric routine failed to converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class StageError(SpectralGngError):
    """Failure inside a named pipeline stage; the original error is chained as __cause__."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")

    @property
    def root(self) -> BaseException:
        err: BaseException = self
        while err.__cause__ is not None:
            err = err.__cause__
        return err
