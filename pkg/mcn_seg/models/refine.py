"""Stagewise refinement towards finer trunk taps.

Each stage doubles resolution: the coarse map is bilinearly upsampled,
concatenated with a 1×1 reduction of the matching skip tap and merged by
a 3×3 conv. A terminal 1×1 conv maps the refined features to classes.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.models.trunk import TapSet
from mcn_seg.nn import functional as F
from mcn_seg.nn.layers import ConvLayer, Module


class RefineStage(Module):
    def __init__(
        self,
        coarse_channels: int,
        skip_channels: int,
        width: int,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        self.reduce = ConvLayer(skip_channels, width, 1, rng=rng)
        self.merge = ConvLayer(coarse_channels + width, width, 3, rng=rng)

    @property
    def c_out(self) -> int:
        return self.merge.c_out

    def forward(self, coarse: Tensor, skip: Tensor) -> Tensor:
        return refinement_step(coarse, skip, self)


def refinement_step(coarse: Tensor, skip: Tensor, stage: RefineStage) -> Tensor:
    """``relu(merge(concat(up2(coarse), reduce(skip))))`` at skip resolution.

    Raises:
        ShapeMismatchError: skip is not exactly twice the coarse resolution
    """
    if skip.spatial != (2 * coarse.height, 2 * coarse.width):
        raise ShapeMismatchError(
            "refinement skip must be twice the coarse resolution",
            coarse.shape,
            skip.shape,
        )
    upsampled = F.bilinear_upsample(coarse, 2)
    merged = stage.merge(ops.concat_channels(upsampled, stage.reduce(skip)))
    return ops.relu(merged)


def refine_pipeline(
    score: Tensor,
    taps: TapSet,
    tap_names: Sequence[str],
    stages: Sequence[RefineStage],
    terminal: ConvLayer | None,
) -> Tensor:
    """Apply ``stages`` against ``tap_names`` (coarse to fine).

    Zero stages is the identity on ``score``.

    Raises:
        ConfigError: tap/stage count mismatch
    """
    if len(tap_names) != len(stages):
        raise ConfigError(
            f"{len(stages)} refinement stages but {len(tap_names)} taps"
        )
    if not stages:
        return score
    h = score
    for name, stage in zip(tap_names, stages, strict=True):
        h = stage(h, taps[name])
    return terminal(h) if terminal is not None else h


class RefinePipeline(Module):
    """Refinement stages for ``tap_names`` plus the class head."""

    def __init__(
        self,
        in_channels: int,
        tap_names: Sequence[str],
        tap_channels: dict[str, int],
        width: int,
        num_classes: int,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.tap_names = list(tap_names)
        stages = []
        c = in_channels
        for name in self.tap_names:
            if name not in tap_channels:
                raise ConfigError(f"refinement tap {name!r} not produced by the trunk")
            stages.append(RefineStage(c, tap_channels[name], width, rng))
            c = width
        self.stages = stages
        self.terminal = ConvLayer(width, num_classes, 1, rng=rng) if stages else None

    @property
    def upsample_factor(self) -> int:
        return 2 ** len(self.stages)

    def forward(self, score: Tensor, taps: TapSet) -> Tensor:
        return refine_pipeline(score, taps, self.tap_names, self.stages, self.terminal)
