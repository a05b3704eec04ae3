"""
Diagnostics for degenerate-but-recoverable situations.

Operations never raise for these; they call emit(), which logs a warning with the
stage tag and records a Diagnostic in every collector opened with collect().
Collectors are context-local so concurrent jobs keep separate lists.
"""
import logging
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Tuple

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Diagnostic:
    stage: str
    code: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"stage": self.stage, "code": self.code, "message": self.message, "details": dict(self.details)}


_collectors: ContextVar[Tuple[List[Diagnostic], ...]] = ContextVar("spectral_gng_diagnostics", default=())


@contextmanager
def collect() -> Iterator[List[Diagnostic]]:
    """Collect every diagnostic emitted inside the block (nested blocks see them too)."""
    bucket: List[Diagnostic] = []
    token = _collectors.set(_collectors.get() + (bucket,))
    try:
        yield bucket
    finally:
        _collectors.reset(token)


def emit(stage: str, code: str, message: str, **details: Any) -> Diagnostic:
    diagnostic = Diagnostic(stage=stage, code=code, message=message, details=details)
    logger.warning(f"[{stage.upper()}] {code}: {message}")
    for bucket in _collectors.get():
        bucket.append(diagnostic)
    return diagnostic
