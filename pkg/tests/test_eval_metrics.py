from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_gng.errors import DimensionMismatchError, InputError
from spectral_gng.eval_metrics import (
    ALL_METRICS, clustering_accuracy, evaluate, f_measure_foreground, mean_metrics, pri, segmentation_covering, vi,
)

partitions = st.lists(st.integers(0, 3), min_size=2, max_size=20)


def _pair_agreement(a, b):
    pairs = list(combinations(range(len(a)), 2))
    agree = sum((a[i] == a[j]) == (b[i] == b[j]) for i, j in pairs)
    return agree / len(pairs)


def _entropy_vi(a, b):
    a, b = np.asarray(a), np.asarray(b)
    n = a.size
    value = 0.0
    for x in np.unique(a):
        for y in np.unique(b):
            joint = np.sum((a == x) & (b == y)) / n
            if joint == 0:
                continue
            p_x = np.sum(a == x) / n
            p_y = np.sum(b == y) / n
            value -= joint * (np.log(joint / p_x) + np.log(joint / p_y))
    return value


def _covering(pred, gt):
    pred, gt = np.asarray(pred), np.asarray(gt)
    total = 0.0
    for region in np.unique(gt):
        R = gt == region
        best = max(np.sum(R & (pred == s)) / np.sum(R | (pred == s)) for s in np.unique(pred))
        total += R.sum() * best
    return total / gt.size


# ---- f_measure_foreground ----

def test_f_measure_identical():
    gt = np.array([[0, 1], [1, 1]])
    assert f_measure_foreground(gt, gt) == 1.0


def test_f_measure_half_recall():
    gt = np.array([1, 1, 1, 1, 0, 0, 0, 0])
    pred = np.array([1, 1, 0, 0, 0, 0, 0, 0])
    assert f_measure_foreground(pred, gt) == pytest.approx(2 / 3)


def test_f_measure_empty_prediction():
    assert f_measure_foreground(np.zeros(4, dtype=int), np.array([1, 0, 0, 0])) == 0.0


def test_f_measure_explicit_foreground_label():
    gt = np.array([2, 2, 5, 5])
    assert f_measure_foreground(np.array([7, 7, 3, 3]), gt, foreground_label=5) == 1.0


def test_f_measure_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        f_measure_foreground(np.zeros((2, 2)), np.zeros((2, 3)))


# ---- segmentation_covering ----

def test_covering_identical():
    gt = np.array([[0, 1], [2, 2]])
    assert segmentation_covering(gt, gt) == 1.0


def test_covering_one_segment_against_halves():
    gt = np.array([[0, 1], [0, 1]])
    assert segmentation_covering(np.zeros((2, 2), dtype=int), gt) == pytest.approx(0.5)


def test_covering_empty_is_rejected():
    with pytest.raises(InputError):
        segmentation_covering(np.zeros((0, 0)), np.zeros((0, 0)))


# ---- pri ----

def test_pri_identical():
    assert pri(np.array([0, 0, 1, 2]), np.array([5, 5, 6, 7])) == 1.0


def test_pri_hand_value():
    assert pri(np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1])) == pytest.approx(1 / 3)


def test_pri_averages_over_ground_truths():
    pred = np.array([0, 0, 1, 1])
    assert pri(pred, [pred, np.array([0, 1, 0, 1])]) == pytest.approx((1 + 1 / 3) / 2)


def test_pri_needs_two_points():
    with pytest.raises(InputError):
        pri(np.array([0]), np.array([0]))


# ---- vi ----

def test_vi_identical_is_zero():
    assert vi(np.array([0, 1, 1, 2]), np.array([3, 4, 4, 5])) == 0.0


def test_vi_singletons_against_one_segment():
    assert vi(np.arange(4), np.zeros(4, dtype=int)) == pytest.approx(np.log(4))


# ---- clustering_accuracy ----

def test_accuracy_identical_and_permuted():
    labels = np.array([0, 0, 1, 2, 2])
    assert clustering_accuracy(labels, labels) == 1.0
    assert clustering_accuracy((labels + 1) % 3, labels) == 1.0


def test_accuracy_hand_matching():
    assert clustering_accuracy(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1])) == pytest.approx(0.75)


def test_accuracy_size_mismatch():
    with pytest.raises(DimensionMismatchError):
        clustering_accuracy(np.zeros(3), np.zeros(4))


# ---- oracle equivalence ----

def test_metrics_match_brute_force_definitions():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(2, 21))
        a = rng.integers(0, int(rng.integers(1, 5)), size=n)
        b = rng.integers(0, int(rng.integers(1, 5)), size=n)
        assert abs(pri(a, b) - _pair_agreement(a, b)) <= 1e-12
        assert abs(vi(a, b) - _entropy_vi(a, b)) <= 1e-12
        assert abs(segmentation_covering(a, b) - _covering(a, b)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(partitions.flatmap(lambda a: st.tuples(st.just(a), st.lists(st.integers(0, 3), min_size=len(a),
                                                                   max_size=len(a)))),
       st.permutations([0, 1, 2, 3]))
def test_metrics_are_relabeling_invariant(pair, permutation):
    a, b = (np.asarray(x) for x in pair)
    relabeled = np.asarray(permutation)[a]
    assert pri(relabeled, b) == pytest.approx(pri(a, b))
    assert vi(relabeled, b) == pytest.approx(vi(a, b), abs=1e-12)
    assert vi(a, b) == pytest.approx(vi(b, a), abs=1e-12)
    assert segmentation_covering(relabeled, b) == pytest.approx(segmentation_covering(a, b))
    assert clustering_accuracy(relabeled, b) == pytest.approx(clustering_accuracy(a, b))
    assert 0.0 <= segmentation_covering(a, b) <= 1.0
    assert vi(a, b) >= 0.0


# ---- evaluate ----

def test_evaluate_selected_metrics():
    gt = np.array([[0, 0, 1], [0, 1, 1]])
    result = evaluate(gt, gt, ["covering", "vi", "pri"])
    assert result == {"covering": 1.0, "vi": 0.0, "pri": 1.0}


def test_evaluate_all_metrics_over_two_truths():
    pred = np.array([[0, 0], [1, 1]])
    result = evaluate(pred, [pred, 1 - pred])
    assert set(result) == set(ALL_METRICS)
    assert result["accuracy"] == 1.0


def test_evaluate_unknown_metric():
    with pytest.raises(InputError):
        evaluate(np.zeros(3), np.zeros(3), ["dice"])


def test_mean_metrics():
    assert mean_metrics([{"pri": 1.0}, {"pri": 0.5}]) == {"pri": 0.75}
    assert mean_metrics([]) == {}
