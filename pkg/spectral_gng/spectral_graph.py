# spectral_gng/spectral_graph.py
# Locally scaled affinity over the GNG edges and the normalized symmetric Laplacian

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from spectral_gng import diagnostics
from spectral_gng.errors import InputError
from spectral_gng.gng import GngModel
from spectral_gng.linalg_core import SpectralDecomposition, sym_eigen

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-12
ZERO_EIGENVALUE_TOL = 1e-9


@dataclass(frozen=True)
class LocalScales:
    sigma: np.ndarray
    K: int = 1


@dataclass(frozen=True)
class AffinityMatrix:
    values: np.ndarray

    @property
    def order(self) -> int:
        return int(self.values.shape[0])

    @property
    def nonzeros(self) -> int:
        return int(np.count_nonzero(self.values))


@dataclass(frozen=True)
class LaplacianSym:
    values: np.ndarray
    degrees: np.ndarray

    @property
    def order(self) -> int:
        return int(self.values.shape[0])

    @property
    def isolated(self) -> np.ndarray:
        return np.flatnonzero(self.degrees == 0.0)


def _pairwise_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def local_scales(model: GngModel, K: int = 1) -> LocalScales:
    """
    sigma_i = distance from neuron i to its K-th nearest direct graph neighbor.
    Neurons with fewer than K neighbors fall back to the K-th nearest neuron overall.
    """
    if K < 1:
        raise InputError(f"K must be >= 1, got {K}")
    m = model.size
    if m < 2:
        raise InputError("local_scales needs at least 2 neurons")
    distances = _pairwise_distances(model.positions)
    sigma = np.empty(m)
    fallback = []
    for i in range(m):
        neighbors = model.neighbors(i)
        if neighbors.size >= K:
            sigma[i] = np.sort(distances[i, neighbors])[K - 1]
        else:
            others = np.delete(distances[i], i)
            sigma[i] = np.sort(others)[min(K, others.size) - 1]
            fallback.append(i)
    if fallback:
        diagnostics.emit("spectral", "scale_fallback",
                         f"{len(fallback)} neuron(s) have fewer than {K} neighbors; using global nearest",
                         neurons=fallback, K=K)

    floored = np.flatnonzero(sigma < SIGMA_FLOOR)
    if floored.size:
        diagnostics.emit("spectral", "scale_floor",
                         f"{floored.size} neuron(s) coincide with their neighbor; sigma floored",
                         neurons=floored.tolist(), floor=SIGMA_FLOOR)
        sigma[floored] = SIGMA_FLOOR
    return LocalScales(sigma=sigma, K=K)


def affinity(model: GngModel, scales: LocalScales) -> AffinityMatrix:
    """A_ij = exp(-d^2(w_i, w_j) / (sigma_i sigma_j)) on GNG edges, zero elsewhere"""
    sigma = np.asarray(scales.sigma, dtype=float)
    if sigma.shape != (model.size,):
        raise InputError(f"Expected {model.size} scales, got shape {sigma.shape}")
    if not np.all(sigma > 0) or not np.all(np.isfinite(sigma)):
        raise InputError("Local scales must be strictly positive and finite")

    A = np.zeros((model.size, model.size))
    pairs = model.edge_pairs()
    if pairs.size:
        a, b = pairs[:, 0], pairs[:, 1]
        diff = model.positions[a] - model.positions[b]
        d2 = np.einsum("ij,ij->i", diff, diff)
        weights = np.exp(-d2 / (sigma[a] * sigma[b]))
        A[a, b] = weights
        A[b, a] = weights
    logger.debug(f"[SPECTRAL] Affinity: m={model.size}, edges={pairs.shape[0]}")
    return AffinityMatrix(values=A)


def normalized_laplacian(A: AffinityMatrix) -> LaplacianSym:
    """L = I - D^-1/2 A D^-1/2; degree-zero nodes get an identity row."""
    values = np.asarray(A.values if isinstance(A, AffinityMatrix) else A, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise InputError(f"Affinity must be square, got shape {values.shape}")
    degrees = values.sum(axis=0)
    isolated = degrees == 0.0
    inv_sqrt = np.zeros_like(degrees)
    inv_sqrt[~isolated] = 1.0 / np.sqrt(degrees[~isolated])

    L = np.eye(values.shape[0]) - inv_sqrt[:, None] * values * inv_sqrt[None, :]
    if np.any(isolated):
        idx = np.flatnonzero(isolated)
        diagnostics.emit("spectral", "isolated_node",
                         f"{idx.size} isolated node(s) in the affinity graph", nodes=idx.tolist())
        L[idx, :] = 0.0
        L[:, idx] = 0.0
        L[idx, idx] = 1.0
    L = 0.5 * (L + L.T)
    return LaplacianSym(values=L, degrees=degrees)


def null_space_basis(L: LaplacianSym) -> np.ndarray:
    """
    Orthonormal basis of ker(L_sym): one column D^1/2 1_C per connected component C
    of the affinity graph, largest component first, lowest member index on ties.
    Isolated nodes carry eigenvalue 1 and get no column.
    """
    links = L.values != 0.0
    np.fill_diagonal(links, False)
    count, labels = connected_components(csr_matrix(links), directed=False)
    columns = []
    for c in range(count):
        members = np.flatnonzero(labels == c)
        if not np.any(L.degrees[members] > 0.0):
            continue
        column = np.zeros(L.order)
        column[members] = np.sqrt(L.degrees[members])
        columns.append((-members.size, int(members[0]), column / np.linalg.norm(column)))
    columns.sort(key=lambda item: item[:2])
    if not columns:
        return np.zeros((L.order, 0))
    return np.column_stack([column for _, _, column in columns])


def spectrum(L: LaplacianSym) -> SpectralDecomposition:
    """
    Full spectrum of L_sym, eigenvalues clamped to [0, 2]. The zero eigenspace is
    replaced by the component basis of null_space_basis, so a graph with several
    components always yields the same e_1..e_c.
    """
    decomposition = sym_eigen(L.values)
    eigenvalues = np.clip(decomposition.eigenvalues, 0.0, 2.0)
    eigenvectors = decomposition.eigenvectors

    basis = null_space_basis(L)
    zeros = basis.shape[1]
    near_zero = int(np.count_nonzero(eigenvalues < ZERO_EIGENVALUE_TOL))
    if zeros and near_zero == zeros:
        eigenvectors = eigenvectors.copy()
        eigenvectors[:, :zeros] = basis
        eigenvalues[:zeros] = 0.0
    elif zeros:
        diagnostics.emit("spectral", "null_space_mismatch",
                         f"{near_zero} near-zero eigenvalue(s) for {zeros} graph component(s); "
                         f"keeping the solver's basis", components=zeros, near_zero=near_zero)

    logger.info(f"[SPECTRAL] Spectrum of order {L.order} after {decomposition.sweeps} sweeps; "
                f"{zeros} component(s), smallest eigenvalues {np.round(eigenvalues[:4], 6).tolist()}")
    return SpectralDecomposition(eigenvalues=eigenvalues, eigenvectors=eigenvectors,
                                 sweeps=decomposition.sweeps)


def component_labels(model: GngModel) -> Tuple[int, np.ndarray]:
    """Connected components of the GNG edge graph"""
    adjacency = csr_matrix((model.ages >= 0).astype(np.int8))
    count, labels = connected_components(adjacency, directed=False)
    return int(count), labels


def dump_matrix_csv(matrix, path: Path) -> None:
    values = np.asarray(getattr(matrix, "values", matrix), dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        for row in values:
            writer.writerow([repr(float(v)) for v in row])
