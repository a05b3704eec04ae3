"""
Dense symmetric eigendecomposition and PCA for small matrices
=============================================================
Sized for m x m affinity/Laplacian matrices with m up to a few hundred.

- sym_eigen: cyclic Jacobi rotations, full spectrum, ascending eigenvalues
- pca: principal components of a column-centered matrix via sym_eigen on its covariance
"""

import logging
from dataclasses import dataclass

import numpy as np

from spectral_gng import diagnostics
from spectral_gng.errors import InputError, NumericError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 100
NEGATIVE_CLAMP = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues ascending; column i of eigenvectors pairs with eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def order(self) -> int:
        return int(self.eigenvalues.shape[0])

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


@dataclass(frozen=True)
class PcaResult:
    component_count: int
    explained_variance_ratios: np.ndarray
    loadings: np.ndarray
    mean: np.ndarray
    degenerate: bool = False

    def scores(self, X: np.ndarray) -> np.ndarray:
        """Project rows of X onto the principal directions"""
        return (np.asarray(X, dtype=float) - self.mean) @ self.loadings


def as_sym_matrix(M) -> np.ndarray:
    """Validate and return a float copy of a symmetric, finite, square matrix."""
    A = np.array(M, dtype=float, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InputError(f"Expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError("Matrix contains non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.T)))
    if asym > SYMMETRY_TOL * scale:
        raise InputError(f"Matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    return 0.5 * (A + A.T)


def _off_diagonal_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def sym_eigen(M) -> SpectralDecomposition:
    """
    Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Stops when the off-diagonal Frobenius norm falls below 1e-12 relative to ||M||_F,
    or raises NumericError after 100 sweeps. Eigenvalues within -1e-10 of zero are
    clamped to 0. Each eigenvector's largest-magnitude entry is made positive.
    """
    A = as_sym_matrix(M)
    n = A.shape[0]
    V = np.eye(n)
    threshold = OFF_DIAGONAL_TOL * max(float(np.linalg.norm(A)), np.finfo(float).tiny)

    # entries below this cannot keep the off-diagonal norm above threshold
    skip_tol = threshold / n

    sweeps = 0
    off = _off_diagonal_norm(A)
    while off > threshold:
        if sweeps >= MAX_SWEEPS:
            diagnostics.emit("linalg", "eigen_nonconverged",
                             f"Jacobi did not converge after {MAX_SWEEPS} sweeps", residual=off)
            raise NumericError(f"Jacobi eigensolver did not converge after {MAX_SWEEPS} sweeps", residual=off)
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= skip_tol:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0

                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
        off = _off_diagonal_norm(A)

    eigenvalues = np.diag(A).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    V = V[:, order]

    eigenvalues[(eigenvalues < 0.0) & (eigenvalues >= -NEGATIVE_CLAMP)] = 0.0

    # sign convention: largest-magnitude entry positive
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivots, np.arange(n)])
    signs[signs == 0] = 1.0
    V = V * signs

    logger.debug(f"[LINALG] Jacobi converged: n={n}, sweeps={sweeps}, off={off:.3e}")
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=V, sweeps=sweeps)


def pca(X) -> PcaResult:
    """
    Principal components of the column-centered matrix X (rows are samples).

    Ratios are ordered descending and sum to one. A matrix with zero total variance
    yields a flagged degenerate result with a single component of ratio 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise InputError(f"pca needs at least 2 rows and 1 column, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError("pca input contains non-finite entries")

    m, k = X.shape
    mean = X.mean(axis=0)
    centered = X - mean
    covariance = centered.T @ centered / (m - 1)
    covariance = 0.5 * (covariance + covariance.T)
    total = float(np.trace(covariance))

    scale = float(np.sum(X * X)) / (m - 1)
    if total <= 1e-14 * max(scale, np.finfo(float).tiny) or total <= 0.0:
        diagnostics.emit("linalg", "pca_degenerate", "PCA input has zero total variance", columns=k)
        loadings = np.zeros((k, 1))
        loadings[0, 0] = 1.0
        return PcaResult(component_count=1, explained_variance_ratios=np.array([1.0]),
                         loadings=loadings, mean=mean, degenerate=True)

    decomposition = sym_eigen(covariance)
    variances = np.clip(decomposition.eigenvalues[::-1], 0.0, None)
    loadings = decomposition.eigenvectors[:, ::-1]
    ratios = variances / variances.sum()
    return PcaResult(component_count=k, explained_variance_ratios=ratios,
                     loadings=loadings, mean=mean, degenerate=False)
