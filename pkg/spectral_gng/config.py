# spectral_gng/config.py
# Run configuration (pydantic models) and ambient environment settings

import os
import logging
from pathlib import Path
from typing import Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

try:  # optional dependency for local .env support
    from dotenv import load_dotenv
except ImportError:  # pragma: no cover - optional
    load_dotenv = None

from spectral_gng.errors import InputError

logger = logging.getLogger(__name__)

# Default number of neurons for image inputs
IMAGE_DEFAULT_M = 100
# Cap on the number of clusters scanned by R_k unless configured otherwise
DEFAULT_K_MAX_CAP = 50
DEFAULT_M_CANDIDATES: Tuple[int, ...] = (4, 8, 16, 32, 64, 128, 256)


class GngParams(BaseModel):
    """Growing neural gas hyper-parameters (standard GNG defaults)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    m_target: int = Field(IMAGE_DEFAULT_M, ge=2)
    eps_b: float = Field(0.05, gt=0.0, lt=1.0)
    eps_n: float = Field(0.006, gt=0.0, lt=1.0)
    insert_interval: int = Field(100, ge=1)
    max_age: int = Field(88, ge=1)
    alpha: float = Field(0.5, gt=0.0, le=1.0)
    beta: float = Field(0.995, gt=0.0, lt=1.0)
    stability_tol: float = Field(1e-3, gt=0.0)
    max_epochs: int = Field(200, ge=1)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _neighbor_rate_below_winner_rate(self):
        if not self.eps_n < self.eps_b:
            raise ValueError(f"eps_n ({self.eps_n}) must be smaller than eps_b ({self.eps_b})")
        return self


class RunConfig(BaseModel):
    """Everything a cluster/segment run depends on. Round-trips through JSON unchanged."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    seed: int = Field(0, ge=0)
    m: Union[int, Literal["auto"]] = "auto"
    m_candidates: Tuple[int, ...] = DEFAULT_M_CANDIDATES
    elbow_restarts: int = Field(3, ge=1)
    K: int = Field(1, ge=1, description="local-scale neighbor rank")
    variance_threshold: float = Field(0.8, gt=0.0, le=1.0)
    k_min: int = Field(2, ge=2)
    k_max: Optional[int] = Field(None, ge=2)
    k: Optional[int] = Field(None, ge=1, description="manual cluster count; R_k is still reported")
    embedding: Literal["xstar", "x", "eigengap"] = "xstar"
    pca_mode: Literal["columns", "components"] = "columns"
    kmeans_restarts: int = Field(10, ge=1)
    kmeans_max_iter: int = Field(300, ge=1)
    feature_mode: Literal["rgb", "rgbxy"] = "rgb"
    dequantize: bool = True
    max_training_pixels: Optional[int] = Field(500_000, ge=2)
    median_filter: bool = True
    gng: GngParams = GngParams()
    output_dir: Optional[Path] = None
    dump_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _check_ranges(self):
        if isinstance(self.m, int) and self.m < 2:
            raise ValueError("m must be >= 2 or 'auto'")
        if list(self.m_candidates) != sorted(set(self.m_candidates)) or any(c < 2 for c in self.m_candidates):
            raise ValueError("m_candidates must be strictly ascending integers >= 2")
        if self.k_max is not None and self.k_max < self.k_min:
            raise ValueError("k_max must be >= k_min")
        return self

    def resolve_k_max(self, m: int) -> int:
        """k_max defaults to min(m, 50); never above m"""
        cap = self.k_max if self.k_max is not None else DEFAULT_K_MAX_CAP
        return max(1, min(m, cap))

    def gng_params(self, m_target: int) -> GngParams:
        return self.gng.model_copy(update={"m_target": m_target, "seed": self.seed})

    def save(self, path: Path) -> None:
        Path(path).write_text(self.model_dump_json(indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        try:
            return cls.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise InputError(f"Cannot read config {path}: {e}") from e


class AmbientSettings(BaseModel):
    """Logging and worker settings. Run parameters never come from the environment."""

    model_config = ConfigDict(frozen=True)

    environment: str = "development"
    log_level: str = "WARNING"
    log_dir: Optional[Path] = None
    max_workers: int = 1

    @property
    def is_production(self) -> bool:
        return self.environment == "production"


def load_environment() -> AmbientSettings:
    """Load a project-level .env (never overriding real env vars) and read ambient settings"""
    if load_dotenv:
        env_path = Path(__file__).resolve().parent.parent / ".env"
        if env_path.exists():  # pragma: no cover - filesystem dependent
            load_dotenv(env_path, override=False)

    environment = os.getenv("SPECTRAL_GNG_ENVIRONMENT", "development")
    log_dir = os.getenv("SPECTRAL_GNG_LOG_DIR")
    try:
        max_workers = int(os.getenv("SPECTRAL_GNG_MAX_WORKERS", "1"))
    except ValueError:
        logger.warning("[CONFIG] SPECTRAL_GNG_MAX_WORKERS is not an integer, using 1")
        max_workers = 1

    return AmbientSettings(
        environment=environment,
        log_level=os.getenv("SPECTRAL_GNG_LOG_LEVEL", "WARNING"),
        log_dir=Path(log_dir) if log_dir else None,
        max_workers=max(1, max_workers),
    )
