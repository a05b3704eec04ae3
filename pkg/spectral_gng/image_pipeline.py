"""
Image segmentation
==================
Pixels become color (optionally color + position) feature vectors, a GNG is trained
on them, its neurons are clustered spectrally and every pixel takes the cluster of its
best matching neuron. A 3x3 label-mode filter smooths the result.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy.ndimage import correlate

from spectral_gng import diagnostics
from spectral_gng.config import IMAGE_DEFAULT_M, RunConfig
from spectral_gng.errors import InputError
from spectral_gng.gng import GngModel, nearest_neurons, train
from spectral_gng.logging_config import log_section_header
from spectral_gng.pipeline import ClusterOutcome, cluster_neurons, run_stage
from spectral_gng.reports import SegmentReport, segment_report

logger = logging.getLogger(__name__)

ImageInput = Union[str, Path, np.ndarray]

_WINDOW = np.ones((3, 3), dtype=np.int32)


@dataclass(frozen=True)
class ImageFeatures:
    width: int
    height: int
    features: np.ndarray
    mode: str = "rgb"

    @property
    def pixel_count(self) -> int:
        return self.width * self.height


@dataclass(frozen=True)
class LabelImage:
    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        if self.labels.shape != (self.height, self.width):
            raise InputError(f"Label array shape {self.labels.shape} does not match {self.height}x{self.width}")

    @classmethod
    def from_array(cls, labels) -> "LabelImage":
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise InputError(f"Label map must be 2-D, got shape {labels.shape}")
        return cls(width=int(labels.shape[1]), height=int(labels.shape[0]), labels=labels.astype(np.int64))

    @property
    def k(self) -> int:
        return int(np.unique(self.labels).size)

    def densified(self) -> "LabelImage":
        """Renumber labels to 0..k-1 in ascending order of the original ids"""
        _, dense = np.unique(self.labels, return_inverse=True)
        return LabelImage(self.width, self.height, dense.reshape(self.labels.shape).astype(np.int64))


@dataclass
class SegmentRun:
    label_image: LabelImage
    raw_labels: LabelImage
    outcome: ClusterOutcome
    model: Optional[GngModel]
    m: int
    training_pixels: int
    features: ImageFeatures
    timings: Dict[str, float] = field(default_factory=dict)


def load_image(path: Union[str, Path]) -> np.ndarray:
    """Decode a PNG or binary PPM into an (H x W x 3) uint8 array"""
    try:
        with Image.open(path) as img:
            img.load()
            rgb = img.convert("RGB")
    except (OSError, UnidentifiedImageError) as e:
        raise InputError(f"Cannot decode image {path}: {e}") from e
    array = np.asarray(rgb, dtype=np.uint8)
    logger.info(f"[IMAGE] Loaded {path}: {array.shape[1]}x{array.shape[0]}")
    return array


def _as_rgb(image: ImageInput) -> np.ndarray:
    if isinstance(image, (str, Path)):
        return load_image(image)
    array = np.asarray(image)
    if array.ndim == 2:
        array = np.repeat(array[:, :, None], 3, axis=2)
    if array.ndim != 3 or array.shape[2] not in (3, 4):
        raise InputError(f"Expected an (H x W x 3) image array, got shape {array.shape}")
    return array[:, :, :3]


def extract_features(image: ImageInput, mode: str = "rgb") -> ImageFeatures:
    """Row-major per-pixel features: RGB in [0, 1], plus x/(W-1), y/(H-1) for rgbxy"""
    if mode not in ("rgb", "rgbxy"):
        raise InputError(f"Unknown feature mode {mode!r}")
    rgb = _as_rgb(image)
    height, width = rgb.shape[:2]
    if height * width == 0:
        raise InputError("Image has no pixels")
    scale = 255.0 if np.issubdtype(rgb.dtype, np.integer) else 1.0
    colors = rgb.reshape(-1, 3).astype(float) / scale
    if not np.all((colors >= 0.0) & (colors <= 1.0)):
        raise InputError("Pixel values must lie in [0, 1] (float) or [0, 255] (integer)")

    if mode == "rgb":
        return ImageFeatures(width=width, height=height, features=colors, mode=mode)

    ys, xs = np.mgrid[0:height, 0:width]
    x = xs.reshape(-1) / (width - 1) if width > 1 else np.zeros(height * width)
    y = ys.reshape(-1) / (height - 1) if height > 1 else np.zeros(height * width)
    return ImageFeatures(width=width, height=height, features=np.column_stack([colors, x, y]), mode=mode)


def assign_pixels(model: GngModel, neuron_labels, features: ImageFeatures) -> LabelImage:
    """Every pixel takes the label of its best matching neuron"""
    neuron_labels = np.asarray(neuron_labels, dtype=np.int64)
    if neuron_labels.shape != (model.size,):
        raise InputError(f"{neuron_labels.shape[0]} neuron labels for {model.size} neurons")
    if features.features.shape[1] != model.dim:
        raise InputError(f"Pixel features have dimension {features.features.shape[1]}, neurons {model.dim}")
    bmu, _ = nearest_neurons(model.positions, features.features)
    return LabelImage(features.width, features.height, neuron_labels[bmu].reshape(features.height, features.width))


def median_filter_3x3(labels: LabelImage) -> LabelImage:
    """
    Label-domain median: each pixel takes the most frequent label of its clipped
    3x3 window. Ties keep the center label when it is among the most frequent,
    otherwise the lowest tied label.
    """
    L = labels.labels
    best_label = L.copy()
    best_count = np.full(L.shape, -1, dtype=np.int32)
    center_count = np.zeros(L.shape, dtype=np.int32)
    for label in np.unique(L):
        mask = L == label
        count = correlate(mask.astype(np.int32), _WINDOW, mode="constant", cval=0)
        better = count > best_count
        best_label[better] = label
        best_count[better] = count[better]
        center_count[mask] = count[mask]
    smoothed = np.where(center_count == best_count, L, best_label)
    return LabelImage(labels.width, labels.height, smoothed)


def training_signals(features: ImageFeatures, config: RunConfig) -> np.ndarray:
    """
    Pixels used as GNG signals: a seeded subsample above max_training_pixels, with
    +/- half a quantization step of uniform jitter on the color channels.
    """
    rng = np.random.default_rng([config.seed, 1])
    data = features.features
    limit = config.max_training_pixels
    if limit is not None and data.shape[0] > limit:
        picked = np.sort(rng.choice(data.shape[0], size=limit, replace=False))
        diagnostics.emit("image", "downsampled", f"Training on {limit} of {data.shape[0]} pixels",
                         pixels=int(data.shape[0]), used=int(limit))
        data = data[picked]
    data = data.copy()
    if config.dequantize:
        data[:, :3] += rng.uniform(-0.5 / 255.0, 0.5 / 255.0, size=(data.shape[0], 3))
    return data


def run_segmentation(image: ImageInput, config: RunConfig) -> SegmentRun:
    timings: Dict[str, float] = {}
    log_section_header(logger, "Image segmentation")
    with diagnostics.collect() as found:
        with run_stage("features", timings):
            features = extract_features(image, config.feature_mode)

        distinct = np.unique(features.features, axis=0).shape[0]
        if distinct < 2:
            diagnostics.emit("image", "single_cluster", "Image has a single feature value; one segment",
                             pixels=features.pixel_count)
            flat = LabelImage(features.width, features.height,
                              np.zeros((features.height, features.width), dtype=np.int64))
            outcome = ClusterOutcome(labels=np.zeros(1, dtype=int), chosen_k=1, k_source="degenerate",
                                     diagnostics=list(found))
            return SegmentRun(label_image=flat, raw_labels=flat, outcome=outcome, model=None, m=1,
                              training_pixels=0, features=features, timings=timings)

        with run_stage("gng", timings):
            data = training_signals(features, config)
            m = IMAGE_DEFAULT_M if config.m == "auto" else int(config.m)
            limit = np.unique(data, axis=0).shape[0]
            if m > limit:
                diagnostics.emit("gng", "m_clamped", f"m={m} exceeds the {limit} distinct training signals",
                                 requested=m, used=limit)
                m = limit
            model = train(data, config.gng_params(m))

        outcome = cluster_neurons(model, config)

        with run_stage("assign", timings):
            raw = assign_pixels(model, outcome.labels, features)
            smoothed = median_filter_3x3(raw) if config.median_filter else raw
            label_image = smoothed.densified()

    outcome.diagnostics = list(found)
    timings.update(outcome.timings)
    logger.info(f"[IMAGE] {features.width}x{features.height}: m={model.size}, chosen_k={outcome.chosen_k}, "
                f"segments={label_image.k}")
    return SegmentRun(label_image=label_image, raw_labels=raw, outcome=outcome, model=model, m=model.size,
                      training_pixels=int(data.shape[0]), features=features, timings=timings)


def segment_image(image: ImageInput, config: RunConfig,
                  include_timings: bool = True) -> Tuple[LabelImage, SegmentReport]:
    """Full pipeline; returns the smoothed LabelImage and its SegmentReport"""
    run = run_segmentation(image, config)
    source = str(image) if isinstance(image, (str, Path)) else None
    return run.label_image, segment_report(run, config, source=source, include_timings=include_timings)


def _palette() -> list:
    rng = np.random.default_rng(0)
    colors = rng.integers(0, 256, size=(256, 3))
    colors[0] = (0, 0, 0)
    return colors.astype(np.uint8).reshape(-1).tolist()


def save_label_png(labels: LabelImage, path: Union[str, Path]) -> None:
    """Indexed PNG when labels fit a palette, 16-bit grayscale otherwise"""
    values = labels.labels
    if values.size and values.max() < 256 and values.min() >= 0:
        img = Image.frombytes("P", (labels.width, labels.height), values.astype(np.uint8).tobytes())
        img.putpalette(_palette())
    else:
        img = Image.fromarray(values.astype(np.uint16))
    img.save(path, format="PNG")


def read_label_png(path: Union[str, Path]) -> np.ndarray:
    """Label map from a PNG: palette/grayscale values are labels, RGB colors are renumbered"""
    try:
        with Image.open(path) as img:
            img.load()
            array = np.asarray(img)
    except (OSError, UnidentifiedImageError) as e:
        raise InputError(f"Cannot decode label image {path}: {e}") from e
    if array.ndim == 3:
        flat = array.reshape(-1, array.shape[2])
        _, inverse = np.unique(flat, axis=0, return_inverse=True)
        return inverse.reshape(array.shape[:2]).astype(np.int64)
    return array.astype(np.int64)
