"""Confusion-matrix segmentation metrics (mean IU, pixel accuracy)."""

from __future__ import annotations

import numpy as np

from mcn_seg.config.constants import FORMAT
from mcn_seg.exceptions import DatasetError, ShapeMismatchError, StatisticsError


class ConfusionMatrix:
    """``K×K`` pixel counts; rows are ground truth, columns predictions."""

    def __init__(self, num_classes: int, counts: np.ndarray | None = None):
        if num_classes < 1:
            raise DatasetError(f"num_classes must be >= 1, got {num_classes}")
        self.num_classes = num_classes
        if counts is None:
            counts = np.zeros((num_classes, num_classes), dtype=np.int64)
        elif counts.shape != (num_classes, num_classes):
            raise ShapeMismatchError("confusion counts", counts.shape)
        self.counts = counts.astype(np.int64, copy=True)

    def accumulate(
        self,
        pred: np.ndarray,
        gt: np.ndarray,
        ignore_label: int = FORMAT.IGNORE_LABEL,
    ) -> ConfusionMatrix:
        """Add one batch of predictions; ``ignore_label`` pixels are skipped."""
        pred = np.asarray(pred)
        gt = np.asarray(gt)
        if pred.shape != gt.shape:
            raise ShapeMismatchError("pred and gt must agree", pred.shape, gt.shape)
        valid = gt != ignore_label
        k = self.num_classes
        gt_v = gt[valid].astype(np.int64)
        pred_v = pred[valid].astype(np.int64)
        if gt_v.size and (gt_v.min() < 0 or gt_v.max() >= k):
            raise DatasetError(f"ground-truth label outside [0, {k})")
        if pred_v.size and (pred_v.min() < 0 or pred_v.max() >= k):
            raise DatasetError(f"predicted label outside [0, {k})")
        self.counts += np.bincount(k * gt_v + pred_v, minlength=k * k).reshape(k, k)
        return self

    def merge(self, other: ConfusionMatrix) -> ConfusionMatrix:
        if other.num_classes != self.num_classes:
            raise ShapeMismatchError(
                "cannot merge confusion matrices", self.counts.shape, other.counts.shape
            )
        return ConfusionMatrix(self.num_classes, self.counts + other.counts)

    __add__ = merge

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return bool(np.array_equal(self.counts, other.counts))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def _require_counts(self) -> None:
        if self.total == 0:
            raise StatisticsError("confusion matrix is empty")

    def per_class_iu(self) -> np.ndarray:
        """IoU per class; NaN where the class has an empty union."""
        self._require_counts()
        inter = np.diag(self.counts).astype(np.float64)
        union = self.counts.sum(axis=0) + self.counts.sum(axis=1) - inter
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(union > 0, inter / np.maximum(union, 1), np.nan)

    def mean_iu(self) -> float:
        """Mean over classes with a non-empty union."""
        iu = self.per_class_iu()
        return float(np.nanmean(iu))

    def pixel_acc(self) -> float:
        self._require_counts()
        return float(np.trace(self.counts) / self.total)

    def __repr__(self) -> str:
        return f"ConfusionMatrix(K={self.num_classes}, total={self.total})"


def accumulate(
    conf: ConfusionMatrix, pred: np.ndarray, gt: np.ndarray
) -> ConfusionMatrix:
    return conf.accumulate(pred, gt)


def mean_iu(conf: ConfusionMatrix) -> float:
    return conf.mean_iu()


def pixel_acc(conf: ConfusionMatrix) -> float:
    return conf.pixel_acc()
