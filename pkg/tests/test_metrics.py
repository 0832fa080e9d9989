"""Tests for rbdiag_cli.metrics module"""

import itertools
import math

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from rbdiag_cli.errors import DimMismatchError, SingleClassTruthError, UndefinedMetricError
from rbdiag_cli.imaging import Mask, Volume
from rbdiag_cli.metrics import (
    ConfusionCounts,
    accuracy,
    confusion,
    metric_values,
    roc_curve,
    sensitivity,
    specificity,
)


def mask(values, dims=None) -> Mask:
    arr = np.asarray(values, dtype=np.uint8)
    dims = dims or (arr.size, 1, 1)
    return Mask(dims, arr.reshape(dims))


def mann_whitney_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    pos, neg = scores[labels == 1], scores[labels == 0]
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_all_background(self):
        assert confusion(mask([0, 0, 0, 0]), mask([0, 0, 0, 0])) == ConfusionCounts(0, 4, 0, 0)

    def test_one_of_each(self):
        assert confusion(mask([1, 1, 0, 0]), mask([1, 0, 0, 1])) == ConfusionCounts(1, 1, 1, 1)

    def test_exhaustive_two_voxel_pairs(self):
        for g, y in itertools.product(itertools.product((0, 1), repeat=2), repeat=2):
            c = confusion(mask(g), mask(y))
            expected = {"tp": 0, "tn": 0, "fp": 0, "fn": 0}
            for truth, pred in zip(g, y):
                key = {(1, 1): "tp", (0, 0): "tn", (0, 1): "fp", (1, 0): "fn"}[(truth, pred)]
                expected[key] += 1
            assert c == ConfusionCounts(**expected)
            assert c.total == 2
            if expected["tp"] + expected["fn"]:
                assert sensitivity(c) == expected["tp"] / (expected["tp"] + expected["fn"])
            if expected["tn"] + expected["fp"]:
                assert specificity(c) == expected["tn"] / (expected["tn"] + expected["fp"])
            assert accuracy(c) == (expected["tp"] + expected["tn"]) / 2

    def test_random_volume_tally(self):
        rng = np.random.default_rng(0)
        g = (rng.random((16, 16, 16)) > 0.5).astype(np.uint8)
        y = (rng.random((16, 16, 16)) > 0.5).astype(np.uint8)
        c = confusion(Mask((16, 16, 16), g), Mask((16, 16, 16), y))
        assert c.tp == int(np.sum((g == 1) & (y == 1)))
        assert c.fn == int(np.sum((g == 1) & (y == 0)))
        assert c.total == 4096

    def test_swap_exchanges_fp_and_fn(self):
        rng = np.random.default_rng(1)
        g = mask(rng.integers(0, 2, 50))
        y = mask(rng.integers(0, 2, 50))
        a, b = confusion(g, y), confusion(y, g)
        assert (a.tp, a.tn, a.fp, a.fn) == (b.tp, b.tn, b.fn, b.fp)

    def test_dims_mismatch(self):
        with pytest.raises(DimMismatchError):
            confusion(mask([0, 1]), mask([0, 1, 0]))


class TestRatios:
    def test_substitution(self):
        c = ConfusionCounts(tp=2, tn=2, fp=1, fn=1)
        assert sensitivity(c) == pytest.approx(2 / 3)
        assert specificity(c) == pytest.approx(2 / 3)
        assert accuracy(c) == pytest.approx(4 / 6)

    def test_perfect_mask(self):
        m = mask([1, 0, 1, 0])
        c = confusion(m, m)
        assert sensitivity(c) == specificity(c) == accuracy(c) == 1.0

    def test_undefined_sensitivity(self):
        with pytest.raises(UndefinedMetricError):
            sensitivity(ConfusionCounts(tp=0, tn=3, fp=1, fn=0))

    def test_metric_values_marks_undefined(self):
        values = metric_values(ConfusionCounts(tp=0, tn=3, fp=1, fn=0))
        assert values["sensitivity"] is None
        assert values["specificity"] == pytest.approx(0.75)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            ConfusionCounts(-1, 0, 0, 0)


class TestRocCurve:
    def test_perfect_separation(self):
        roc = roc_curve(np.array([0.9, 0.1]).reshape(2, 1, 1), mask([1, 0]))
        assert roc.auc == 1.0
        assert roc.points[0] == (0.0, 0.0)
        assert roc.points[-1] == (1.0, 1.0)
        assert math.isinf(roc.thresholds[0])

    def test_all_equal_scores(self):
        roc = roc_curve(np.full((4, 1, 1), 0.3), mask([1, 0, 1, 0]))
        assert roc.auc == pytest.approx(0.5)

    def test_matches_pair_counting(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            labels = rng.integers(0, 2, 40)
            labels[:2] = (0, 1)
            scores = np.round(rng.random(40), 2)
            roc = roc_curve(scores.reshape(40, 1, 1), mask(labels))
            assert abs(roc.auc - mann_whitney_auc(scores, labels)) < 1e-9
            assert roc.auc == pytest.approx(roc_auc_score(labels, scores))

    def test_monotone_and_spanning(self):
        rng = np.random.default_rng(3)
        labels = rng.integers(0, 2, 30)
        labels[:2] = (0, 1)
        roc = roc_curve(rng.random(30).reshape(30, 1, 1), mask(labels))
        fpr = [p[0] for p in roc.points]
        tpr = [p[1] for p in roc.points]
        assert fpr == sorted(fpr) and tpr == sorted(tpr)
        assert roc.points[-1] == (1.0, 1.0)

    def test_inverted_scores(self):
        rng = np.random.default_rng(4)
        labels = rng.integers(0, 2, 30)
        labels[:2] = (0, 1)
        scores = rng.random(30).reshape(30, 1, 1)
        a = roc_curve(scores, mask(labels)).auc
        b = roc_curve(1.0 - scores, mask(labels)).auc
        assert a + b == pytest.approx(1.0)

    def test_accepts_volume(self):
        vol = Volume((2, 1, 1), np.array([0.2, 0.7]).reshape(2, 1, 1))
        assert roc_curve(vol, mask([0, 1])).auc == 1.0

    def test_single_class_truth(self):
        with pytest.raises(SingleClassTruthError):
            roc_curve(np.zeros((3, 1, 1)), mask([1, 1, 1]))

    def test_shape_mismatch(self):
        with pytest.raises(DimMismatchError):
            roc_curve(np.zeros((2, 1, 1)), mask([0, 1, 0]))
