"""
Clustering in the embedding space
=================================
- kmeans: k-means++ seeding + Lloyd iterations, best of several seeded restarts
- davies_bouldin: DBI with mean-distance dispersion and centroid separation
- r_k_curve: R_k = DBI_k(X*) + sum of the k smallest eigenvalues, minimized over k
- eigengap_k: largest gap between consecutive ascending eigenvalues
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from spectral_gng import diagnostics
from spectral_gng.errors import InputError

logger = logging.getLogger(__name__)

DBI_SENTINEL = 1e6


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: List[float] = field(default_factory=list)

    @property
    def k(self) -> int:
        return int(self.centroids.shape[0])


@dataclass(frozen=True)
class KCurveEntry:
    k: int
    dbi: float
    lambda_sum: float
    r_k: float


@dataclass(frozen=True)
class KSelectionCurve:
    entries: List[KCurveEntry]
    chosen_k: int
    labels_by_k: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def entry(self, k: int) -> KCurveEntry:
        for item in self.entries:
            if item.k == k:
                return item
        raise KeyError(k)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"Expected a non-empty 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("Matrix contains non-finite values")
    return X


def _sq_distances(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _kmeans_plus_plus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    centroids[0] = X[rng.integers(n)]
    closest = np.einsum("ij,ij->i", X - centroids[0], X - centroids[0])
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            pick = int(rng.choice(n, p=closest / total))
        else:
            pick = int(rng.integers(n))
        centroids[j] = X[pick]
        diff = X - centroids[j]
        closest = np.minimum(closest, np.einsum("ij,ij->i", diff, diff))
    return centroids


def _assign(X: np.ndarray, centroids: np.ndarray):
    """Nearest-centroid labels; an empty cluster takes the farthest point of a multi-member cluster."""
    d2 = _sq_distances(X, centroids)
    labels = np.argmin(d2, axis=1)
    dist = d2[np.arange(X.shape[0]), labels]
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        counts = np.bincount(labels, minlength=k)
        movable = counts[labels] > 1
        candidates = np.where(movable, dist, -1.0)
        p = int(np.argmax(candidates))
        labels[p] = j
        centroids[j] = X[p]
        dist[p] = 0.0
    return labels, float(dist.sum())


def _update(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(labels, minlength=k).astype(float)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, labels, X)
    return sums / counts[:, None]


def _canonical_labels(labels: np.ndarray, centroids: np.ndarray):
    """Renumber clusters by first appearance"""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels], centroids[order]


def kmeans(X, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 300) -> KMeansResult:
    """
    k-means with k-means++ seeding. Lloyd iterations run until the assignment stops
    changing or max_iter; the restart with the lowest inertia wins (earliest on ties).
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"k={k} must lie in [1, {n}]")
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        diagnostics.emit("kmeans", "kmeans_duplicates",
                         f"k={k} exceeds the {distinct} distinct rows; duplicate centroids follow",
                         k=k, distinct=distinct)

    rng = np.random.default_rng(seed)
    best: Optional[KMeansResult] = None
    for _ in range(n_init):
        centroids = _kmeans_plus_plus(X, k, rng)
        labels, inertia = _assign(X, centroids)
        history = [inertia]
        iterations = 0
        for iterations in range(1, max_iter + 1):
            centroids = _update(X, labels, k)
            new_labels, inertia = _assign(X, centroids)
            history.append(inertia)
            if np.array_equal(new_labels, labels):
                break
            labels = new_labels
        centroids = _update(X, labels, k)
        final = float(np.sum((X - centroids[labels]) ** 2))
        if best is None or final < best.inertia:
            labels_c, centroids_c = _canonical_labels(labels, centroids)
            best = KMeansResult(labels=labels_c, centroids=centroids_c, inertia=final,
                                iterations=iterations, inertia_history=history)
    return best


def davies_bouldin(X, labels) -> float:
    """
    Mean over clusters of the worst (S_i + S_j) / d(c_i, c_j), where S is the mean
    Euclidean distance to the centroid. Coinciding centroids or a single cluster give
    the sentinel 1e6 with a diagnostic.
    """
    X = _as_matrix(X)
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise InputError("labels length does not match the number of rows")
    clusters, inverse = np.unique(labels, return_inverse=True)
    c = clusters.size
    if c < 2:
        diagnostics.emit("dbi", "dbi_degenerate", "DBI needs at least two clusters", clusters=int(c))
        return DBI_SENTINEL

    counts = np.bincount(inverse, minlength=c).astype(float)
    sums = np.zeros((c, X.shape[1]))
    np.add.at(sums, inverse, X)
    centroids = sums / counts[:, None]
    spread = np.linalg.norm(X - centroids[inverse], axis=1)
    S = np.bincount(inverse, weights=spread, minlength=c) / counts

    separation = np.sqrt(_sq_distances(centroids, centroids))
    off_diagonal = ~np.eye(c, dtype=bool)
    if np.any(separation[off_diagonal] == 0.0):
        diagnostics.emit("dbi", "dbi_degenerate", "Two cluster centroids coincide", clusters=int(c))
        return DBI_SENTINEL

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (S[:, None] + S[None, :]) / separation
    ratios[~off_diagonal] = -np.inf
    return float(np.mean(ratios.max(axis=1)))


def r_k_curve(X_star, eigenvalues, k_min: int = 2, k_max: Optional[int] = None, seed: int = 0,
              n_init: int = 10, max_iter: int = 300) -> KSelectionCurve:
    """R_k = DBI_k(X*) + sum_{i<=k} lambda_i for k in [k_min, k_max]; chosen_k minimizes it (smallest k on ties)."""
    X_star = _as_matrix(X_star)
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    m = X_star.shape[0]
    k_max = m if k_max is None else k_max
    if k_max > m or k_max > eigenvalues.shape[0]:
        raise InputError(f"k_max={k_max} exceeds the number of rows ({m}) or eigenvalues ({eigenvalues.shape[0]})")
    if k_min < 1 or k_min > k_max:
        raise InputError(f"Empty k range [{k_min}, {k_max}]")

    cumulative = np.cumsum(eigenvalues)
    entries: List[KCurveEntry] = []
    labels_by_k: Dict[int, np.ndarray] = {}
    for k in range(k_min, k_max + 1):
        result = kmeans(X_star, k, seed=_k_seed(seed, k), n_init=n_init, max_iter=max_iter)
        dbi = davies_bouldin(X_star, result.labels) if k >= 2 else DBI_SENTINEL
        lambda_sum = float(cumulative[k - 1])
        entries.append(KCurveEntry(k=k, dbi=dbi, lambda_sum=lambda_sum, r_k=dbi + lambda_sum))
        labels_by_k[k] = result.labels

    scores = np.array([e.r_k for e in entries])
    chosen_k = entries[int(np.argmin(scores))].k
    logger.info(f"[R_K] k range [{k_min}, {k_max}] -> chosen_k={chosen_k}")
    return KSelectionCurve(entries=entries, chosen_k=chosen_k, labels_by_k=labels_by_k)


def _k_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def eigengap_k(eigenvalues, k_max: Optional[int] = None) -> int:
    """argmax over 1 <= k < k_max of lambda_{k+1} - lambda_k (1-based), lowest k on ties"""
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if eigenvalues.shape[0] < 3:
        raise InputError("eigengap_k needs at least 3 eigenvalues")
    k_max = eigenvalues.shape[0] if k_max is None else min(k_max, eigenvalues.shape[0])
    if k_max < 2:
        return 1
    gaps = np.diff(eigenvalues[:k_max])
    return int(np.argmax(gaps)) + 1


def curve_rows(curve: KSelectionCurve) -> List[dict]:
    return [{"k": e.k, "dbi": e.dbi, "lambda_sum": e.lambda_sum, "r_k": e.r_k} for e in curve.entries]
