"""Single- and multi-scale inference plus dataset evaluation."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from loguru import logger

from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.exceptions import ConfigError
from mcn_seg.models.pipeline import SegmentationPipeline
from mcn_seg.nn import functional as F
from mcn_seg.training.metrics import ConfusionMatrix
from mcn_seg.training.synth import SynthSample
from mcn_seg.utils.parallel import parallel_map


def scaled_size(size: int, scale: float, divisibility: int) -> int:
    """``size·scale`` rounded to the nearest positive multiple."""
    steps = max(1, int(round(size * scale / divisibility)))
    return steps * divisibility


def multiscale_infer(
    model: SegmentationPipeline, image: Tensor, scales: Sequence[float]
) -> Tensor:
    """Average of score maps computed at each scale, at ``image`` resolution.

    Raises:
        ConfigError: empty ``scales`` or a non-positive scale
    """
    if not scales:
        raise ConfigError("multiscale_infer needs at least one scale")
    if any(s <= 0 for s in scales):
        raise ConfigError(f"scales must be positive, got {list(scales)}")
    h, w = image.spatial
    total: np.ndarray | None = None
    for scale in scales:
        size = (
            scaled_size(h, scale, model.divisibility),
            scaled_size(w, scale, model.divisibility),
        )
        scores = model(F.resize_bilinear(image, size))
        scores = F.resize_bilinear(scores, (h, w))
        total = scores.data.copy() if total is None else total + scores.data
    return Tensor(total / len(scales))


def predict(
    model: SegmentationPipeline, sample: SynthSample, scales: Sequence[float]
) -> np.ndarray:
    """Class-index map ``(h, w)`` for one sample."""
    scores = multiscale_infer(model, Tensor(sample.image[None]), scales)
    return scores.data[0].argmax(axis=0)


def evaluate(
    model: SegmentationPipeline,
    samples: Sequence[SynthSample],
    scales: Sequence[float] = (1.0,),
) -> ConfusionMatrix:
    """Confusion matrix over ``samples``; computed in shards and merged."""
    model.eval()

    def shard(sample: SynthSample) -> ConfusionMatrix:
        conf = ConfusionMatrix(model.num_classes)
        return conf.accumulate(predict(model, sample, scales), sample.label)

    total = ConfusionMatrix(model.num_classes)
    for part in parallel_map(shard, samples):
        total = total.merge(part)
    logger.debug(
        f"evaluated {len(samples)} samples at scales {list(scales)}: "
        f"{total.total} pixels"
    )
    return total
