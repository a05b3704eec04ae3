# spectral_gng/gng.py
# Growing neural gas: m representative neurons plus the aged edge set E_GNG

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from spectral_gng import diagnostics
from spectral_gng.config import GngParams
from spectral_gng.embed_cluster import kmeans
from spectral_gng.errors import InputError

logger = logging.getLogger(__name__)

NO_EDGE = -1
# rows per block when measuring point-to-neuron distances
_CHUNK = 4096


@dataclass(frozen=True)
class Neuron:
    position: np.ndarray
    error: float


@dataclass(frozen=True)
class GngEdge:
    a: int
    b: int
    age: int


class GngModel:
    """
    Neuron positions (n x d), accumulated errors (n) and a symmetric age matrix
    (n x n, NO_EDGE where two neurons are not connected).

    The update operations below mutate the model in place and return it.
    """

    def __init__(self, positions: np.ndarray, errors: Optional[np.ndarray] = None,
                 ages: Optional[np.ndarray] = None):
        self.positions = np.array(positions, dtype=float)
        if self.positions.ndim != 2:
            raise InputError(f"Neuron positions must be a 2-D array, got shape {self.positions.shape}")
        n = self.positions.shape[0]
        self.errors = np.zeros(n) if errors is None else np.array(errors, dtype=float)
        if ages is None:
            self.ages = np.full((n, n), NO_EDGE, dtype=np.int64)
        else:
            self.ages = np.array(ages, dtype=np.int64)
        if self.errors.shape != (n,) or self.ages.shape != (n, n):
            raise InputError("Neuron errors/ages do not match the number of positions")

    @classmethod
    def from_edges(cls, positions, edges: Sequence[Tuple[int, int]], errors=None) -> "GngModel":
        model = cls(positions, errors)
        for a, b in edges:
            model.connect(a, b)
        return model

    # ---- structure ----

    @property
    def size(self) -> int:
        return int(self.positions.shape[0])

    @property
    def dim(self) -> int:
        return int(self.positions.shape[1])

    @property
    def neurons(self) -> List[Neuron]:
        return [Neuron(position=self.positions[i].copy(), error=float(self.errors[i])) for i in range(self.size)]

    @property
    def edges(self) -> List[GngEdge]:
        a_idx, b_idx = np.nonzero(np.triu(self.ages >= 0, k=1))
        return [GngEdge(a=int(a), b=int(b), age=int(self.ages[a, b])) for a, b in zip(a_idx, b_idx)]

    def edge_pairs(self) -> np.ndarray:
        """(E x 2) array of connected pairs with a < b"""
        a_idx, b_idx = np.nonzero(np.triu(self.ages >= 0, k=1))
        return np.stack([a_idx, b_idx], axis=1) if a_idx.size else np.zeros((0, 2), dtype=int)

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(np.triu(self.ages >= 0, k=1)))

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.ages[i] >= 0)

    def connect(self, a: int, b: int, age: int = 0) -> None:
        if a == b:
            raise InputError("A neuron cannot be connected to itself")
        self.ages[a, b] = self.ages[b, a] = age

    def disconnect(self, a: int, b: int) -> None:
        self.ages[a, b] = self.ages[b, a] = NO_EDGE

    def copy(self) -> "GngModel":
        return GngModel(self.positions.copy(), self.errors.copy(), self.ages.copy())

    def scaled(self, factor: float) -> "GngModel":
        """Same topology, positions multiplied by factor"""
        return GngModel(self.positions * factor, self.errors * factor * factor, self.ages.copy())

    def _add_neuron(self, position: np.ndarray, error: float) -> int:
        n = self.size
        self.positions = np.vstack([self.positions, position[None, :]])
        self.errors = np.append(self.errors, error)
        ages = np.full((n + 1, n + 1), NO_EDGE, dtype=np.int64)
        ages[:n, :n] = self.ages
        self.ages = ages
        return n

    def _remove_neurons(self, indices: Sequence[int]) -> None:
        keep = np.ones(self.size, dtype=bool)
        keep[list(indices)] = False
        self.positions = self.positions[keep]
        self.errors = self.errors[keep]
        self.ages = self.ages[np.ix_(keep, keep)]


def _check_vector(model: GngModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.dim:
        raise InputError(f"Signal has dimension {x.shape[0]}, neurons have dimension {model.dim}")
    return x


def find_bmu(model: GngModel, x) -> Tuple[int, int]:
    """Nearest and second-nearest neuron (Euclidean); ties go to the lowest index."""
    if model.size < 2:
        raise InputError("find_bmu needs at least 2 neurons")
    x = _check_vector(model, x)
    diff = model.positions - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    first = int(np.argmin(d2))
    d2[first] = np.inf
    second = int(np.argmin(d2))
    return first, second


def adapt_step(model: GngModel, x, params: GngParams) -> GngModel:
    """
    Present one signal: accumulate the winner's squared error, move the winner by
    eps_b and its topological neighbors by eps_n (additive update), refresh the
    winner/runner-up edge, age the winner's other edges, prune edges older than
    max_age and drop neurons left without edges while more than two remain.
    """
    x = _check_vector(model, x)
    first, second = find_bmu(model, x)

    neighbors = model.neighbors(first)
    if neighbors.size:
        model.ages[first, neighbors] += 1
        model.ages[neighbors, first] += 1

    residual = x - model.positions[first]
    model.errors[first] += float(residual @ residual)
    model.positions[first] += params.eps_b * residual
    if neighbors.size:
        model.positions[neighbors] += params.eps_n * (x - model.positions[neighbors])

    model.connect(first, second, 0)

    stale = neighbors[model.ages[first, neighbors] > params.max_age]
    if stale.size:
        model.ages[first, stale] = NO_EDGE
        model.ages[stale, first] = NO_EDGE
        isolated = [int(i) for i in stale if not np.any(model.ages[i] >= 0)]
        room = model.size - 2
        if isolated and room > 0:
            model._remove_neurons(isolated[:room])
    return model


def insert_neuron(model: GngModel, params: GngParams) -> GngModel:
    """
    Insert a neuron halfway between the max-error neuron q and its max-error
    neighbor f, rewire q-f through it and scale both errors by alpha.
    """
    if model.size < 2:
        raise InputError("insert_neuron needs at least 2 neurons")
    q = int(np.argmax(model.errors))
    neighbors = model.neighbors(q)
    if neighbors.size == 0:
        diagnostics.emit("gng", "insert_skipped", f"Neuron {q} has no neighbors; insertion skipped", neuron=q)
        return model
    f = int(neighbors[np.argmax(model.errors[neighbors])])

    model.errors[q] *= params.alpha
    model.errors[f] *= params.alpha
    midpoint = 0.5 * (model.positions[q] + model.positions[f])
    new = model._add_neuron(midpoint, float(model.errors[q]))
    model.disconnect(q, f)
    model.connect(new, q, 0)
    model.connect(new, f, 0)
    return model


def nearest_neurons(positions: np.ndarray, data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Index of, and squared distance to, the nearest neuron for every row of data"""
    positions = np.asarray(positions, dtype=float)
    data = np.asarray(data, dtype=float)
    index = np.empty(data.shape[0], dtype=np.int64)
    dist2 = np.empty(data.shape[0])
    for start in range(0, data.shape[0], _CHUNK):
        block = data[start:start + _CHUNK]
        diff = block[:, None, :] - positions[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        best = np.argmin(d2, axis=1)
        index[start:start + _CHUNK] = best
        dist2[start:start + _CHUNK] = d2[np.arange(block.shape[0]), best]
    return index, dist2


def two_nearest_neurons(positions: np.ndarray, data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Index of the nearest and second-nearest neuron for every row of data"""
    positions = np.asarray(positions, dtype=float)
    data = np.asarray(data, dtype=float)
    if positions.shape[0] < 2:
        raise InputError("two_nearest_neurons needs at least 2 neurons")
    first = np.empty(data.shape[0], dtype=np.int64)
    second = np.empty(data.shape[0], dtype=np.int64)
    for start in range(0, data.shape[0], _CHUNK):
        block = data[start:start + _CHUNK]
        diff = block[:, None, :] - positions[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        order = np.argsort(d2, axis=1, kind="stable")[:, :2]
        first[start:start + _CHUNK] = order[:, 0]
        second[start:start + _CHUNK] = order[:, 1]
    return first, second


def prune_to_data(model: GngModel, data) -> GngModel:
    """
    Final competitive Hebbian pass over data without adaptation. Neurons that are
    no signal's winner are removed (at least two neurons always stay), and the edge
    set becomes the (winner, runner-up) pairs of the signals. Edges that survive
    keep their age, new ones start at 0.
    """
    data = _as_data(data)
    first, _ = two_nearest_neurons(model.positions, data)
    wins = np.bincount(first, minlength=model.size)
    idle = np.flatnonzero(wins == 0)
    if idle.size and model.size - idle.size >= 2:
        model._remove_neurons(idle)
        logger.info(f"[GNG] Removed {idle.size} neuron(s) that win no signal")

    first, second = two_nearest_neurons(model.positions, data)
    supported = np.zeros((model.size, model.size), dtype=bool)
    supported[first, second] = True
    supported |= supported.T
    np.fill_diagonal(supported, False)
    dropped = int(np.count_nonzero(np.triu((model.ages >= 0) & ~supported, k=1)))
    model.ages = np.where(supported, np.maximum(model.ages, 0), NO_EDGE)
    logger.debug(f"[GNG] Final pass: {model.size} neurons, {model.edge_count} edges, {dropped} stale edge(s) dropped")
    return model


def quantization_error(model: GngModel, data) -> float:
    """Mean squared distance from each point to its best matching unit"""
    data = _as_data(data)
    if data.shape[0] == 0:
        raise InputError("quantization_error needs at least one point")
    if data.shape[1] != model.dim:
        raise InputError(f"Data has dimension {data.shape[1]}, neurons have dimension {model.dim}")
    _, dist2 = nearest_neurons(model.positions, data)
    return float(dist2.mean())


def _as_data(data) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.ndim != 2:
        raise InputError(f"Data must be a list of feature vectors, got shape {data.shape}")
    if not np.all(np.isfinite(data)):
        raise InputError("Data contains non-finite values")
    return data


def train(data, params: GngParams) -> GngModel:
    """
    Grow a neural gas on data until m_target neurons exist and the pass-end
    quantization error is stable, or until max_epochs passes, then run prune_to_data
    so the returned graph only holds neurons and edges the data supports.

    Deterministic for a given params.seed: the two initial neurons and the
    presentation order of every pass come from one seeded generator.
    """
    data = _as_data(data)
    distinct = np.unique(data, axis=0)
    if distinct.shape[0] < 2:
        raise InputError("GNG training needs at least 2 distinct data points")
    if params.m_target > data.shape[0]:
        raise InputError(f"m_target={params.m_target} exceeds the number of data points ({data.shape[0]})")

    rng = np.random.default_rng(params.seed)
    start = rng.choice(distinct.shape[0], size=2, replace=False)
    model = GngModel(distinct[start])
    logger.info(f"[GNG] Training: n={data.shape[0]}, dim={data.shape[1]}, m_target={params.m_target}")

    signals = 0
    previous_error = None
    epoch = 0
    for epoch in range(1, params.max_epochs + 1):
        for i in rng.permutation(data.shape[0]):
            adapt_step(model, data[i], params)
            signals += 1
            if signals % params.insert_interval == 0 and model.size < params.m_target:
                insert_neuron(model, params)
        model.errors *= params.beta

        error = quantization_error(model, data)
        logger.debug(f"[GNG] epoch={epoch} neurons={model.size} edges={model.edge_count} qe={error:.6g}")
        if model.size < params.m_target:
            previous_error = None
            continue
        if previous_error is not None:
            change = abs(previous_error - error) / previous_error if previous_error > 0 else 0.0
            if change < params.stability_tol:
                break
        previous_error = error

    prune_to_data(model, data)
    logger.info(f"[GNG] Finished after {epoch} epochs ({signals} signals): "
                f"{model.size} neurons, {model.edge_count} edges")
    return model


@dataclass(frozen=True)
class ElbowResult:
    candidates: List[int]
    errors: List[float]
    distances: List[float]
    chosen_m: int
    flat: bool = False


def elbow_point(candidates: Sequence[int], errors: Sequence[float]) -> ElbowResult:
    """
    Candidate farthest from the chord joining the first and last points of the
    (m, error) curve, both axes scaled to [0, 1]. A curve with no point off the
    chord returns the smallest candidate.
    """
    m = np.asarray(candidates, dtype=float)
    q = np.asarray(errors, dtype=float)
    if m.shape[0] < 3 or m.shape != q.shape:
        raise InputError("The elbow rule needs at least 3 candidates with one error each")
    if np.any(np.diff(m) <= 0):
        raise InputError("Candidates must be strictly ascending")

    x = (m - m[0]) / (m[-1] - m[0])
    spread = float(q.max() - q.min())
    y = (q - q.min()) / spread if spread > 0 else np.zeros_like(q)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    distances = np.abs(dy * (x - x[0]) - dx * (y - y[0])) / np.hypot(dx, dy)

    flat = spread == 0 or float(distances.max()) <= 1e-9
    if flat:
        diagnostics.emit("gng", "elbow_flat", "Quantization-error curve has no elbow; using the smallest candidate",
                         candidates=[int(c) for c in candidates])
        chosen = int(candidates[0])
    else:
        chosen = int(candidates[int(np.argmax(distances))])
    return ElbowResult(candidates=[int(c) for c in candidates], errors=[float(v) for v in q],
                       distances=[float(d) for d in distances], chosen_m=chosen, flat=flat)


def select_m_elbow(data, candidates: Sequence[int], seed: int = 0, restarts: int = 3) -> ElbowResult:
    """Quantization error of seeded k-means++ for every candidate m, then the elbow of that curve"""
    data = _as_data(data)
    errors = []
    for m in candidates:
        result = kmeans(data, int(m), seed=seed, n_init=restarts)
        errors.append(result.inertia / data.shape[0])
        logger.debug(f"[GNG] Elbow candidate m={m}: quantization error {errors[-1]:.6g}")
    elbow = elbow_point(candidates, errors)
    logger.info(f"[GNG] Elbow over {list(candidates)} -> m={elbow.chosen_m}")
    return elbow


def dump_model_csv(model: GngModel, neurons_path: Path, edges_path: Path) -> None:
    """Neuron positions/errors and the edge list (a, b, age) as CSV"""
    with open(neurons_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["index"] + [f"x{j}" for j in range(model.dim)] + ["error"])
        for i in range(model.size):
            writer.writerow([i] + [repr(float(v)) for v in model.positions[i]] + [repr(float(model.errors[i]))])
    with open(edges_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["a", "b", "age"])
        for edge in model.edges:
            writer.writerow([edge.a, edge.b, edge.age])
