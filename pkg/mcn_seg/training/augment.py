"""Training-time augmentation: flip, random scale and random crop.

Images are resampled bilinearly and labels with nearest neighbour, so a
scaled label never contains a class the original did not. Crops larger
than the scaled sample are padded with zeros (image) and the ignore label
(label).
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from mcn_seg.config.constants import FORMAT
from mcn_seg.config.settings import AugmentConfig
from mcn_seg.nn.functional import interpolation_matrix
from mcn_seg.training.synth import SynthSample


def hflip(sample: SynthSample) -> SynthSample:
    return SynthSample(
        image=np.ascontiguousarray(sample.image[:, :, ::-1]),
        label=np.ascontiguousarray(sample.label[:, ::-1]),
        seed=sample.seed,
    )


def _nearest_index(in_size: int, out_size: int) -> np.ndarray:
    src = np.floor((np.arange(out_size) + 0.5) * (in_size / out_size))
    return np.clip(src.astype(np.int64), 0, in_size - 1)


def rescale(sample: SynthSample, factor: float) -> SynthSample:
    """Resize by ``factor`` (output at least 1×1)."""
    h, w = sample.label.shape
    out_h = max(1, int(round(h * factor)))
    out_w = max(1, int(round(w * factor)))
    if (out_h, out_w) == (h, w):
        return sample
    my = interpolation_matrix(h, out_h)
    mx = interpolation_matrix(w, out_w)
    image = np.matmul(np.matmul(my, sample.image.astype(np.float64)), mx.T)
    rows = _nearest_index(h, out_h)
    cols = _nearest_index(w, out_w)
    label = sample.label[np.ix_(rows, cols)]
    return SynthSample(
        image=np.clip(image, 0.0, 1.0).astype(np.float32),
        label=np.ascontiguousarray(label),
        seed=sample.seed,
    )


def random_crop(
    sample: SynthSample, size: int, rng: np.random.Generator
) -> SynthSample:
    """Crop ``size``×``size``, padding first when the sample is smaller."""
    h, w = sample.label.shape
    pad_h, pad_w = max(0, size - h), max(0, size - w)
    image, label = sample.image, sample.label
    if pad_h or pad_w:
        image = np.pad(image, ((0, 0), (0, pad_h), (0, pad_w)))
        label = np.pad(
            label,
            ((0, pad_h), (0, pad_w)),
            constant_values=FORMAT.IGNORE_LABEL,
        )
        h, w = label.shape
    y = int(rng.integers(0, h - size + 1))
    x = int(rng.integers(0, w - size + 1))
    return SynthSample(
        image=np.ascontiguousarray(image[:, y : y + size, x : x + size]),
        label=np.ascontiguousarray(label[y : y + size, x : x + size]),
        seed=sample.seed,
    )


def augment(
    sample: SynthSample,
    rng: np.random.Generator,
    config: AugmentConfig | None = None,
) -> SynthSample:
    """Flip with ``flip_prob``, scale in ``[scale_min, scale_max]``, crop."""
    config = config or AugmentConfig()
    flip = bool(rng.random() < config.flip_prob)
    factor = float(rng.uniform(config.scale_min, config.scale_max))
    out = hflip(sample) if flip else sample
    out = rescale(out, factor)
    out = random_crop(out, config.crop_size, rng)
    logger.trace(f"augment seed={sample.seed} flip={flip} scale={factor:.3f}")
    return out
