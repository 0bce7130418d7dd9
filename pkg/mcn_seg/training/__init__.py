"""Optimization, metrics, synthetic data and augmentation."""

from mcn_seg.training.augment import augment, hflip, random_crop, rescale
from mcn_seg.training.metrics import ConfusionMatrix, accumulate, mean_iu, pixel_acc
from mcn_seg.training.optimizer import (
    NesterovSGD,
    OptimizerState,
    lr_schedule,
    nesterov_step,
)
from mcn_seg.training.synth import (
    SHAPES,
    SynthSample,
    sample_seeds,
    synth_dataset,
    synth_sample,
)

__all__ = [
    "SHAPES",
    "ConfusionMatrix",
    "NesterovSGD",
    "OptimizerState",
    "SynthSample",
    "accumulate",
    "augment",
    "hflip",
    "lr_schedule",
    "mean_iu",
    "nesterov_step",
    "pixel_acc",
    "random_crop",
    "rescale",
    "sample_seeds",
    "synth_dataset",
    "synth_sample",
]
