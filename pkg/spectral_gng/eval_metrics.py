"""
Segmentation and clustering evaluation
======================================
All partition metrics are computed from the contingency table of the two labelings,
so they are invariant under relabeling of either side.

- f_measure_foreground: F-measure of the foreground after majority-overlap binarization
- segmentation_covering: area-weighted best IoU of every ground-truth region
- pri: (probabilistic) Rand index, averaged over one or more ground truths
- vi: variation of information, natural log
- clustering_accuracy: best one-to-one matching (Hungarian) accuracy
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

from spectral_gng.errors import DimensionMismatchError, InputError

logger = logging.getLogger(__name__)

ALL_METRICS = ("f_measure", "covering", "pri", "vi", "accuracy")


@dataclass(frozen=True)
class Contingency:
    counts: np.ndarray
    pred_ids: np.ndarray
    gt_ids: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def pred_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def gt_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def _flat_labels(labels) -> np.ndarray:
    return np.asarray(getattr(labels, "labels", labels)).reshape(-1)


def _check_pair(pred, gt):
    a = np.asarray(getattr(pred, "labels", pred))
    b = np.asarray(getattr(gt, "labels", gt))
    if a.shape != b.shape:
        raise DimensionMismatchError(f"Prediction shape {a.shape} does not match ground truth {b.shape}")
    if a.size == 0:
        raise InputError("Cannot evaluate empty labelings")
    return a.reshape(-1), b.reshape(-1)


def contingency(pred, gt) -> Contingency:
    a, b = _check_pair(pred, gt)
    pred_ids, i = np.unique(a, return_inverse=True)
    gt_ids, j = np.unique(b, return_inverse=True)
    counts = np.zeros((pred_ids.size, gt_ids.size), dtype=np.int64)
    np.add.at(counts, (i, j), 1)
    return Contingency(counts=counts, pred_ids=pred_ids, gt_ids=gt_ids)


def f_measure_foreground(pred, gt, foreground_label: Optional[int] = None) -> float:
    """
    Predicted foreground = union of predicted segments with more than half their pixels
    in the ground-truth foreground (gt != 0, or gt == foreground_label when given).
    """
    a, b = _check_pair(pred, gt)
    fg = b != 0 if foreground_label is None else b == foreground_label
    table = contingency(a, fg.astype(np.int64))
    if table.gt_ids.size == 1:
        # ground truth is all foreground or all background
        column = np.zeros((table.counts.shape[0], 2), dtype=np.int64)
        column[:, int(table.gt_ids[0])] = table.counts[:, 0]
        counts = column
    else:
        counts = table.counts
    chosen = counts[:, 1] > counts[:, 0]

    true_positive = int(counts[chosen, 1].sum())
    predicted = int(counts[chosen].sum())
    actual = int(fg.sum())
    precision = true_positive / predicted if predicted else 0.0
    recall = true_positive / actual if actual else 0.0
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def segmentation_covering(pred, gt) -> float:
    """(1/N) * sum over gt regions R of |R| * max_R' |R n R'| / |R u R'|"""
    table = contingency(pred, gt)
    n = table.counts.astype(float)
    union = table.pred_sizes[:, None] + table.gt_sizes[None, :] - n
    iou = n / union
    return float(np.sum(table.gt_sizes * iou.max(axis=0)) / table.total)


def rand_index(pred, gt) -> float:
    table = contingency(pred, gt)
    total = table.total
    if total < 2:
        raise InputError("The Rand index needs at least 2 points")
    pairs = comb(total, 2)
    together_both = comb(table.counts, 2).sum()
    together_pred = comb(table.pred_sizes, 2).sum()
    together_gt = comb(table.gt_sizes, 2).sum()
    return float((pairs + 2.0 * together_both - together_pred - together_gt) / pairs)


def pri(pred, gt: Union[np.ndarray, Sequence[np.ndarray]]) -> float:
    """Fraction of point pairs on which the partitions agree, averaged over ground truths"""
    truths = gt if isinstance(gt, (list, tuple)) else [gt]
    if not truths:
        raise InputError("pri needs at least one ground truth")
    return float(np.mean([rand_index(pred, truth) for truth in truths]))


def _variation_of_information(pred, gt) -> float:
    table = contingency(pred, gt)
    total = float(table.total)
    rows, cols = np.nonzero(table.counts)
    p = table.counts[rows, cols] / total
    p_pred = table.pred_sizes[rows] / total
    p_gt = table.gt_sizes[cols] / total
    # H(pred | gt) + H(gt | pred), both terms non-negative
    value = -np.sum(p * (np.log(p / p_gt) + np.log(p / p_pred)))
    return float(max(value, 0.0))


def vi(pred, gt: Union[np.ndarray, Sequence[np.ndarray]]) -> float:
    """H(pred) + H(gt) - 2 I(pred, gt), averaged over ground truths"""
    truths = gt if isinstance(gt, (list, tuple)) else [gt]
    if not truths:
        raise InputError("vi needs at least one ground truth")
    return float(np.mean([_variation_of_information(pred, truth) for truth in truths]))


def clustering_accuracy(pred_labels, true_labels) -> float:
    """Share of points labeled correctly under the best one-to-one label matching"""
    a = _flat_labels(pred_labels)
    b = _flat_labels(true_labels)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.size} predicted labels for {b.size} true labels")
    table = contingency(a, b)
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    return float(table.counts[rows, cols].sum() / table.total)


_METRIC_FUNCTIONS = {
    "covering": segmentation_covering,
    "pri": rand_index,
    "vi": _variation_of_information,
    "accuracy": clustering_accuracy,
}


def evaluate(pred, gt: Union[np.ndarray, Sequence[np.ndarray]], metrics: Iterable[str] = ALL_METRICS,
             foreground_label: Optional[int] = None) -> Dict[str, float]:
    """Selected metrics for one prediction, each averaged over the given ground truths"""
    truths = list(gt) if isinstance(gt, (list, tuple)) else [gt]
    if not truths:
        raise InputError("evaluate needs at least one ground truth")
    results: Dict[str, float] = {}
    for name in metrics:
        if name == "f_measure":
            values = [f_measure_foreground(pred, truth, foreground_label) for truth in truths]
        elif name in _METRIC_FUNCTIONS:
            values = [_METRIC_FUNCTIONS[name](pred, truth) for truth in truths]
        else:
            raise InputError(f"Unknown metric {name!r}; choose from {', '.join(ALL_METRICS)}")
        results[name] = float(np.mean(values))
    logger.debug(f"[EVAL] {results}")
    return results


def mean_metrics(rows: List[Dict[str, float]]) -> Dict[str, float]:
    if not rows:
        return {}
    return {name: float(np.mean([row[name] for row in rows])) for name in rows[0]}
