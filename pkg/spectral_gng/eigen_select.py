"""
Eigenvector relevance and selection
===================================
Each eigenvector e_k (k >= 2) of L_sym is scored with

    R_ek = sum_{c=2..4} DBI_c(e_k) / lambda_k

where DBI_c is the Davies-Bouldin index of the optimal 1-D c-clustering of the
eigenvector's entries. Eigenvectors whose score falls outside mean +/- std of all
scores form X; X* keeps the prefix of X that covers the configured share of variance.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from spectral_gng import diagnostics
from spectral_gng.embed_cluster import eigengap_k
from spectral_gng.errors import InputError
from spectral_gng.linalg_core import SpectralDecomposition, pca

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-10
DBI_FLOOR = 1e-6
DBI_SENTINEL = 1e6
CLUSTER_COUNTS = (2, 3, 4)
MAX_HISTOGRAM_BINS = 256


@dataclass(frozen=True)
class EigenScore:
    index: int
    dbi_sum: float
    lam: float
    r: float
    dbi_terms: Sequence[float] = ()

    @property
    def label(self) -> str:
        return f"e{self.index + 1}"


@dataclass(frozen=True)
class SelectionResult:
    """Scores plus the chosen eigenvector columns. Indices are 0-based into the decomposition."""

    scores: List[EigenScore]
    mu: float
    sigma: float
    fd_bin_width: float
    chosen: List[int]
    X: np.ndarray
    X_star: np.ndarray
    fallback: bool = False
    explained_variance_ratios: List[float] = field(default_factory=list)

    @property
    def p(self) -> int:
        return int(self.X_star.shape[1])


@dataclass(frozen=True)
class VarianceRefinement:
    X_star: np.ndarray
    p: int
    explained_variance_ratios: np.ndarray
    degenerate: bool = False


def _partition_1d(sorted_values: np.ndarray, c: int) -> List[np.ndarray]:
    """Optimal (minimum within-cluster SSE) split of sorted values into c contiguous runs."""
    n = sorted_values.shape[0]
    x = sorted_values - sorted_values.mean()
    s1 = np.concatenate([[0.0], np.cumsum(x)])
    s2 = np.concatenate([[0.0], np.cumsum(x * x)])

    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    count = (j - i + 1).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        cost = (s2[j + 1] - s2[i]) - (s1[j + 1] - s1[i]) ** 2 / count
    cost = np.where(j >= i, np.maximum(cost, 0.0), np.inf)

    best = cost[0].copy()
    back = []
    for _ in range(1, c):
        candidates = best[:-1, None] + cost[1:, :]
        start = np.argmin(candidates, axis=0) + 1
        best = candidates[start - 1, np.arange(n)]
        back.append(start)

    bounds = [n]
    end = n - 1
    for start in reversed(back):
        s = int(start[end])
        bounds.append(s)
        end = s - 1
    bounds.append(0)
    bounds = bounds[::-1]
    return [sorted_values[bounds[t]:bounds[t + 1]] for t in range(c)]


def dbi_1d(values, c: int) -> float:
    """
    Davies-Bouldin index of the exact 1-D c-means partition of values.
    S is the mean absolute deviation from the cluster centroid.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if c < 2 or values.shape[0] < c:
        raise InputError(f"dbi_1d needs at least c >= 2 values (got {values.shape[0]} values, c={c})")
    if not np.all(np.isfinite(values)):
        raise InputError("dbi_1d values must be finite")
    if np.all(values == values[0]):
        diagnostics.emit("eigen_select", "dbi_degenerate", "All values identical; DBI set to sentinel", c=c)
        return DBI_SENTINEL

    clusters = _partition_1d(np.sort(values), c)
    centroids = np.array([cluster.mean() for cluster in clusters])
    spread = np.array([np.mean(np.abs(cluster - centroid)) for cluster, centroid in zip(clusters, centroids)])

    separation = np.abs(centroids[:, None] - centroids[None, :])
    off_diagonal = ~np.eye(c, dtype=bool)
    if np.any(separation[off_diagonal] == 0.0):
        diagnostics.emit("eigen_select", "dbi_degenerate", "Two cluster centroids coincide; DBI set to sentinel", c=c)
        return DBI_SENTINEL

    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = (spread[:, None] + spread[None, :]) / separation
    ratios[~off_diagonal] = -np.inf
    return float(np.mean(ratios.max(axis=1)))


def relevance_scores(decomposition: SpectralDecomposition) -> List[EigenScore]:
    """R_ek for every eigenpair except the first, in ascending eigenvalue order"""
    m = decomposition.order
    if m < 5:
        raise InputError(f"relevance_scores needs at least 5 eigenpairs, got {m}")
    scores = []
    for index in range(1, m):
        vector = decomposition.eigenvectors[:, index]
        terms = [max(dbi_1d(vector, c), DBI_FLOOR) for c in CLUSTER_COUNTS]
        lam = float(decomposition.eigenvalues[index])
        dbi_sum = float(sum(terms))
        scores.append(EigenScore(index=index, dbi_sum=dbi_sum, lam=lam,
                                 r=dbi_sum / max(lam, LAMBDA_FLOOR), dbi_terms=tuple(terms)))
    logger.debug(f"[EIGEN_SELECT] Scored {len(scores)} eigenvectors")
    return scores


def fd_bin_width(r_values) -> float:
    """Freedman-Diaconis width 2 * IQR * n^(-1/3); range / sqrt(n) when the IQR vanishes"""
    r_values = np.asarray(r_values, dtype=float).reshape(-1)
    n = r_values.shape[0]
    if n < 4:
        raise InputError(f"fd_bin_width needs at least 4 values, got {n}")
    q75, q25 = np.percentile(r_values, [75, 25])
    iqr = float(q75 - q25)
    if iqr > 0:
        return 2.0 * iqr * n ** (-1.0 / 3.0)
    width = float(np.ptp(r_values)) / np.sqrt(n)
    diagnostics.emit("eigen_select", "fd_fallback", "Inter-quartile range is zero; using range/sqrt(n)", width=width)
    return width


def select_eigenvectors(scores: List[EigenScore], decomposition: SpectralDecomposition,
                        k_max: Optional[int] = None) -> SelectionResult:
    """
    Keep eigenvectors whose score lies outside [mu - sigma, mu + sigma] (sample std).
    When nothing qualifies, fall back to e_2..e_kgap from the eigengap estimate.
    """
    if not scores:
        raise InputError("select_eigenvectors needs at least one score")
    r = np.array([s.r for s in scores])
    mu = float(r.mean())
    sigma = float(r.std(ddof=1)) if r.size > 1 else 0.0
    width = fd_bin_width(r) if r.size >= 4 else 0.0

    if np.ptp(r) == 0.0:
        outside = np.zeros(r.shape, dtype=bool)
    else:
        outside = (r < mu - sigma) | (r > mu + sigma)
    chosen = sorted(s.index for s, hit in zip(scores, outside) if hit)
    fallback = False
    if not chosen:
        k_gap = eigengap_k(decomposition.eigenvalues, k_max)
        chosen = list(range(1, max(k_gap, 2)))
        fallback = True
        diagnostics.emit("eigen_select", "selection_fallback",
                         f"No score outside mu +/- sigma; using eigengap estimate k={k_gap}",
                         k_gap=k_gap, chosen=chosen)

    X = decomposition.eigenvectors[:, chosen]
    logger.info(f"[EIGEN_SELECT] mu={mu:.4g} sigma={sigma:.4g} chosen={['e%d' % (i + 1) for i in chosen]}")
    return SelectionResult(scores=list(scores), mu=mu, sigma=sigma, fd_bin_width=width,
                           chosen=chosen, X=X, X_star=X, fallback=fallback)


def refine_variance(X, threshold: float = 0.8, mode: str = "columns") -> VarianceRefinement:
    """
    Smallest p whose leading principal components reach threshold of the variance.
    mode "columns" keeps the first p columns of X, "components" the first p PCA scores.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise InputError(f"refine_variance needs a matrix with at least one column, got shape {X.shape}")
    if not 0.0 < threshold <= 1.0:
        raise InputError(f"threshold must lie in (0, 1], got {threshold}")

    result = pca(X)
    if result.degenerate:
        diagnostics.emit("eigen_select", "variance_degenerate", "Selected eigenvectors carry no variance; keeping the first")
        return VarianceRefinement(X_star=X[:, :1], p=1, explained_variance_ratios=result.explained_variance_ratios,
                                  degenerate=True)

    cumulative = np.cumsum(result.explained_variance_ratios)
    p = int(np.searchsorted(cumulative, threshold - 1e-12)) + 1
    p = min(max(p, 1), X.shape[1])
    X_star = result.scores(X)[:, :p] if mode == "components" else X[:, :p]
    logger.debug(f"[EIGEN_SELECT] Variance refinement kept {p} of {X.shape[1]} columns")
    return VarianceRefinement(X_star=X_star, p=p, explained_variance_ratios=result.explained_variance_ratios)


def with_refinement(selection: SelectionResult, refinement: VarianceRefinement) -> SelectionResult:
    return replace(selection, X_star=refinement.X_star,
                   explained_variance_ratios=[float(v) for v in refinement.explained_variance_ratios])


def score_table_rows(selection: SelectionResult) -> List[dict]:
    chosen = set(selection.chosen)
    rows = []
    for s in selection.scores:
        terms = list(s.dbi_terms) + [None] * (len(CLUSTER_COUNTS) - len(s.dbi_terms))
        rows.append({
            "index": s.index,
            "eigenvector": s.label,
            "lambda": s.lam,
            "dbi_2": terms[0],
            "dbi_3": terms[1],
            "dbi_4": terms[2],
            "r": s.r,
            "chosen": s.index in chosen,
        })
    return rows


def histogram_data(selection: SelectionResult) -> dict:
    """Bin edges/counts of the r-scores at the Freedman-Diaconis width plus the mu +/- sigma markers"""
    r = np.array([s.r for s in selection.scores])
    low, high = float(r.min()), float(r.max())
    width = selection.fd_bin_width
    if width > 0 and high > low and (high - low) / width <= MAX_HISTOGRAM_BINS:
        bins = max(1, int(np.ceil((high - low) / width)))
        capped = False
    else:
        bins = MAX_HISTOGRAM_BINS if high > low else 1
        capped = width > 0 and high > low
    counts, edges = np.histogram(r, bins=bins, range=(low, high) if high > low else (low - 0.5, low + 0.5))
    return {
        "bin_width": width,
        "capped": capped,
        "edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
        "mu": selection.mu,
        "sigma": selection.sigma,
        "lower": selection.mu - selection.sigma,
        "upper": selection.mu + selection.sigma,
    }
