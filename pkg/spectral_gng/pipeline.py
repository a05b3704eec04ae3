# spectral_gng/pipeline.py
# Spectral clustering of a trained GNG, shared by point and image inputs

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional

import numpy as np

from spectral_gng import diagnostics
from spectral_gng.config import RunConfig
from spectral_gng.diagnostics import Diagnostic
from spectral_gng.eigen_select import (
    SelectionResult, refine_variance, relevance_scores, select_eigenvectors, with_refinement,
)
from spectral_gng.embed_cluster import KSelectionCurve, eigengap_k, kmeans, r_k_curve
from spectral_gng.errors import InputError, SpectralGngError, StageError
from spectral_gng.gng import ElbowResult, GngModel, nearest_neurons, select_m_elbow, train
from spectral_gng.linalg_core import SpectralDecomposition
from spectral_gng.logging_config import log_subsection
from spectral_gng.spectral_graph import (
    AffinityMatrix, LaplacianSym, affinity, component_labels, local_scales, normalized_laplacian, spectrum,
)

logger = logging.getLogger(__name__)

# relevance scoring clusters each eigenvector into up to 4 groups
MIN_SPECTRAL_NEURONS = 5


@dataclass
class ClusterOutcome:
    labels: np.ndarray
    chosen_k: int
    k_source: str
    curve: Optional[KSelectionCurve] = None
    selection: Optional[SelectionResult] = None
    decomposition: Optional[SpectralDecomposition] = None
    affinity: Optional[AffinityMatrix] = None
    laplacian: Optional[LaplacianSym] = None
    eigengap_k: Optional[int] = None
    component_count: int = 1
    diagnostics: List[Diagnostic] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)


@dataclass
class PointClustering:
    point_labels: np.ndarray
    neuron_labels: np.ndarray
    outcome: ClusterOutcome
    model: Optional[GngModel]
    m: int
    elbow: Optional[ElbowResult] = None


@contextmanager
def run_stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    """Time a stage and re-raise any failure as StageError(name)"""
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except (SpectralGngError, ValueError, ArithmeticError, OSError) as e:
        logger.error(f"[{name.upper()}] Stage failed: {e}")
        raise StageError(name, str(e)) from e
    finally:
        timings[name] = timings.get(name, 0.0) + time.perf_counter() - start


def _embedding_for(config: RunConfig, selection: SelectionResult, decomposition: SpectralDecomposition,
                   k_gap: int) -> np.ndarray:
    if config.embedding == "x":
        return selection.X
    if config.embedding == "eigengap":
        # classical k-way embedding: e_1..e_kgap with unit-length rows
        Y = decomposition.eigenvectors[:, :max(k_gap, 1)]
        norms = np.linalg.norm(Y, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return Y / norms
    return selection.X_star


def cluster_neurons(model: GngModel, config: RunConfig) -> ClusterOutcome:
    """
    local scales -> affinity -> L_sym -> spectrum -> R_ek scoring -> selection ->
    variance refinement -> R_k curve -> k-means at the chosen k
    """
    timings: Dict[str, float] = {}
    m = model.size
    with diagnostics.collect() as found:
        if m < MIN_SPECTRAL_NEURONS:
            diagnostics.emit("pipeline", "single_cluster",
                             f"Only {m} neurons; spectral selection needs {MIN_SPECTRAL_NEURONS}",
                             neurons=m)
            return ClusterOutcome(labels=np.zeros(m, dtype=int), chosen_k=1, k_source="degenerate",
                                  diagnostics=list(found), timings=timings)

        log_subsection(logger, f"Spectral clustering of {m} neurons")
        with run_stage("spectral", timings):
            scales = local_scales(model, config.K)
            A = affinity(model, scales)
            L = normalized_laplacian(A)
            decomposition = spectrum(L)
            components, _ = component_labels(model)

        k_max = config.resolve_k_max(m)
        with run_stage("eigen_select", timings):
            scores = relevance_scores(decomposition)
            selection = select_eigenvectors(scores, decomposition, k_max)
            refinement = refine_variance(selection.X, config.variance_threshold, config.pca_mode)
            selection = with_refinement(selection, refinement)

        with run_stage("r_k", timings):
            k_gap = eigengap_k(decomposition.eigenvalues, k_max)
            embedding = _embedding_for(config, selection, decomposition, k_gap)
            k_min = min(config.k_min, k_max)
            curve = r_k_curve(embedding, decomposition.eigenvalues, k_min=k_min, k_max=k_max, seed=config.seed,
                              n_init=config.kmeans_restarts, max_iter=config.kmeans_max_iter)

        if config.k is not None:
            chosen_k, k_source = min(config.k, m), "manual"
        elif config.embedding == "eigengap":
            chosen_k, k_source = k_gap, "eigengap"
        else:
            chosen_k, k_source = curve.chosen_k, "r_k"

        with run_stage("kmeans", timings):
            if chosen_k in curve.labels_by_k:
                labels = curve.labels_by_k[chosen_k]
            else:
                labels = kmeans(embedding, chosen_k, seed=config.seed, n_init=config.kmeans_restarts,
                                max_iter=config.kmeans_max_iter).labels

        logger.info(f"[R_K] chosen_k={chosen_k} ({k_source}), eigengap k={k_gap}, "
                    f"|X|={len(selection.chosen)}, |X*|={selection.p}")
        return ClusterOutcome(labels=np.asarray(labels, dtype=int), chosen_k=int(chosen_k), k_source=k_source,
                              curve=curve, selection=selection, decomposition=decomposition, affinity=A,
                              laplacian=L, eigengap_k=int(k_gap), component_count=components,
                              diagnostics=list(found), timings=timings)


def resolve_m(points: np.ndarray, config: RunConfig, distinct: int):
    """Neuron count for point data: the configured m, or the elbow of the quantization-error curve"""
    limit = min(distinct, points.shape[0])
    if config.m != "auto":
        m = int(config.m)
        if m > limit:
            diagnostics.emit("gng", "m_clamped", f"m={m} exceeds the {limit} distinct points; using {limit}",
                             requested=m, used=limit)
            m = limit
        return m, None

    candidates = [c for c in config.m_candidates if c <= limit]
    if len(candidates) < 3:
        m = candidates[-1] if candidates else limit
        diagnostics.emit("gng", "elbow_skipped",
                         f"Fewer than 3 candidates fit {limit} distinct points; using m={m}",
                         candidates=list(config.m_candidates), used=m)
        return m, None
    elbow = select_m_elbow(points, candidates, seed=config.seed, restarts=config.elbow_restarts)
    return elbow.chosen_m, elbow


def cluster_points(points, config: RunConfig) -> PointClustering:
    """Elbow m (unless fixed) -> GNG -> cluster_neurons -> every point takes its BMU's label"""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InputError(f"Expected a non-empty (n x d) point matrix, got shape {points.shape}")
    if not np.all(np.isfinite(points)):
        raise InputError("Points contain non-finite values")

    timings: Dict[str, float] = {}
    with diagnostics.collect() as found:
        distinct = np.unique(points, axis=0).shape[0]
        if distinct < 2:
            diagnostics.emit("pipeline", "single_cluster", "All points are identical; one cluster",
                             points=int(points.shape[0]))
            outcome = ClusterOutcome(labels=np.zeros(1, dtype=int), chosen_k=1, k_source="degenerate")
            outcome.diagnostics = list(found)
            return PointClustering(point_labels=np.zeros(points.shape[0], dtype=int),
                                   neuron_labels=outcome.labels, outcome=outcome, model=None, m=1)

        with run_stage("elbow", timings):
            m, elbow = resolve_m(points, config, distinct)

        with run_stage("gng", timings):
            model = train(points, config.gng_params(m))

        outcome = cluster_neurons(model, config)
        with run_stage("assign", timings):
            bmu, _ = nearest_neurons(model.positions, points)
            point_labels = outcome.labels[bmu]

    outcome.timings = {**timings, **outcome.timings}
    outcome.diagnostics = list(found)
    return PointClustering(point_labels=point_labels, neuron_labels=outcome.labels, outcome=outcome,
                           model=model, m=m, elbow=elbow)
