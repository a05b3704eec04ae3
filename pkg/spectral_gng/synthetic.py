# spectral_gng/synthetic.py
# Seeded synthetic point sets with known labels: concentric rings and Gaussian blobs

import logging
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from spectral_gng.errors import InputError

logger = logging.getLogger(__name__)

SyntheticKind = Literal["rings", "blobs", "rings_with_noise"]


class SyntheticParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    radii: Tuple[float, ...] = (1.0, 4.0, 7.0)
    width: float = Field(0.4, ge=0.0)
    count: int = 300
    centers: Tuple[Tuple[float, float], ...] = ((0.0, 0.0), (10.0, 0.0), (0.0, 10.0))
    sigma: float = Field(1.0, gt=0.0)
    noise_count: int = 60

    @model_validator(mode="after")
    def _check_counts(self):
        if self.count <= 0:
            raise ValueError(f"count must be positive, got {self.count}")
        if self.noise_count < 0:
            raise ValueError(f"noise_count must be non-negative, got {self.noise_count}")
        if not self.radii or any(r <= 0 for r in self.radii):
            raise ValueError("radii must be a non-empty list of positive values")
        if not self.centers:
            raise ValueError("centers must not be empty")
        return self


def make_rings(params: SyntheticParams, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """Annuli of the given radii and width, count points each, uniform in angle and radius"""
    points, labels = [], []
    for label, radius in enumerate(params.radii):
        r = rng.uniform(radius - params.width / 2, radius + params.width / 2, size=params.count)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=params.count)
        points.append(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))
        labels.append(np.full(params.count, label))
    return np.vstack(points), np.concatenate(labels)


def make_blobs(params: SyntheticParams, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    points, labels = [], []
    for label, center in enumerate(params.centers):
        points.append(rng.normal(loc=center, scale=params.sigma, size=(params.count, 2)))
        labels.append(np.full(params.count, label))
    return np.vstack(points), np.concatenate(labels)


def gen_synthetic(kind: SyntheticKind, params: Optional[SyntheticParams] = None,
                  seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Points (n x 2) and integer labels; identical for identical (kind, params, seed)"""
    params = params or SyntheticParams()
    rng = np.random.default_rng(seed)
    if kind == "rings":
        points, labels = make_rings(params, rng)
    elif kind == "blobs":
        points, labels = make_blobs(params, rng)
    elif kind == "rings_with_noise":
        points, labels = make_rings(params, rng)
        if params.noise_count:
            extent = max(params.radii) + params.width
            noise = rng.uniform(-extent, extent, size=(params.noise_count, 2))
            # noise points take the label of the ring whose radius is closest
            radius = np.linalg.norm(noise, axis=1)
            nearest = np.argmin(np.abs(radius[:, None] - np.asarray(params.radii)[None, :]), axis=1)
            points = np.vstack([points, noise])
            labels = np.concatenate([labels, nearest])
    else:
        raise InputError(f"Unknown synthetic kind {kind!r}")

    logger.info(f"[SYNTH] {kind}: {points.shape[0]} points, {np.unique(labels).size} labels (seed={seed})")
    return points, labels.astype(np.int64)
