"""Tests for confusion-matrix metrics."""

import numpy as np
import pytest

from mcn_seg.exceptions import DatasetError, ShapeMismatchError, StatisticsError
from mcn_seg.training.metrics import ConfusionMatrix


class TestConfusionMatrix:
    """Test suite for ConfusionMatrix."""

    def test_perfect_prediction(self, rng):
        """Prediction equal to ground truth scores 1 on both metrics."""
        gt = rng.integers(0, 3, size=(2, 8, 8))
        conf = ConfusionMatrix(3).accumulate(gt, gt)
        assert conf.mean_iu() == 1.0
        assert conf.pixel_acc() == 1.0

    def test_hand_computed(self):
        """[[3, 1], [1, 3]]: IU 0.6 per class, accuracy 0.75."""
        conf = ConfusionMatrix(2, np.array([[3, 1], [1, 3]]))
        np.testing.assert_allclose(conf.per_class_iu(), [0.6, 0.6])
        assert conf.mean_iu() == pytest.approx(0.6)
        assert conf.pixel_acc() == pytest.approx(0.75)

    def test_constant_prediction(self):
        """Predicting class 0 on a half/half image."""
        gt = np.array([[0, 0, 1, 1]])
        conf = ConfusionMatrix(2).accumulate(np.zeros_like(gt), gt)
        assert conf.pixel_acc() == pytest.approx(0.5)
        assert conf.mean_iu() == pytest.approx(0.25)

    def test_absent_class_excluded(self):
        """Classes with an empty union do not dilute the mean."""
        gt = np.array([[0, 1]])
        conf = ConfusionMatrix(3).accumulate(gt, gt)
        assert np.isnan(conf.per_class_iu()[2])
        assert conf.mean_iu() == 1.0

    def test_ignore_label_skipped(self):
        """Ignored pixels are not counted."""
        gt = np.array([[0, 255, 1]])
        pred = np.array([[0, 1, 1]])
        assert ConfusionMatrix(2).accumulate(pred, gt).total == 2

    def test_merge(self):
        """Merging sums the counts."""
        a = ConfusionMatrix(2).accumulate(np.array([0, 1]), np.array([0, 1]))
        b = ConfusionMatrix(2).accumulate(np.array([1]), np.array([0]))
        assert (a + b).counts.tolist() == [[1, 1], [0, 1]]

    def test_empty_matrix(self):
        """Metrics need at least one pixel."""
        with pytest.raises(StatisticsError):
            ConfusionMatrix(2).mean_iu()
        with pytest.raises(StatisticsError):
            ConfusionMatrix(2).pixel_acc()

    def test_label_out_of_range(self):
        """Labels must be valid classes."""
        with pytest.raises(DatasetError):
            ConfusionMatrix(2).accumulate(np.array([2]), np.array([0]))

    def test_shape_mismatch(self):
        """Prediction and ground truth agree in shape."""
        with pytest.raises(ShapeMismatchError):
            ConfusionMatrix(2).accumulate(np.zeros(3), np.zeros(4))
