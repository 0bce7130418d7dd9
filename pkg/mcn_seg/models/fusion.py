"""Channel reduction and fusion of selected trunk taps.

Every selected tap passes its own 1×1 conv to the target width and is
brought to the coarsest selected resolution with average pooling; the
results are summed or concatenated. The context network then runs on the
coarse grid and refinement restores resolution afterwards.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence

import numpy as np

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import FusionConfig, FusionMode
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.models.trunk import TapSet
from mcn_seg.nn import functional as F
from mcn_seg.nn.layers import ConvLayer, Module


def fuse_taps(
    taps: TapSet,
    selection: Sequence[str],
    reducers: Mapping[str, ConvLayer],
    mode: FusionMode = FusionMode.SUM,
) -> Tensor:
    """Reduce, align and combine ``selection`` taps.

    Raises:
        ConfigError: empty selection, or a tap without a reducer
    """
    if not selection:
        raise ConfigError("fuse_taps needs at least one tap")
    reduced = []
    for name in selection:
        if name not in reducers:
            raise ConfigError(f"no reduce layer for tap {name!r}")
        reduced.append(reducers[name](taps[name]))

    target_h = min(r.height for r in reduced)
    target_w = min(r.width for r in reduced)
    aligned = []
    for name, r in zip(selection, reduced, strict=True):
        factor = r.height // target_h
        if (r.height, r.width) != (factor * target_h, factor * target_w):
            raise ShapeMismatchError(
                f"tap {name!r} is not an integer multiple of the coarsest tap",
                r.shape,
            )
        aligned.append(F.avg_pool2(r, factor) if factor > 1 else r)

    if len(aligned) == 1:
        return aligned[0]
    if mode is FusionMode.CONCAT:
        return ops.concat_channels(*aligned)
    fused = aligned[0]
    for other in aligned[1:]:
        fused = ops.add(fused, other)
    return fused


class TapFusion(Module):
    """Per-tap 1×1 reducers plus the configured combination mode."""

    def __init__(
        self,
        config: FusionConfig,
        tap_channels: Mapping[str, int],
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        if not config.taps:
            raise ConfigError("fusion needs at least one tap")
        unknown = [t for t in config.taps if t not in tap_channels]
        if unknown:
            raise ConfigError(f"fusion taps {unknown} not produced by the trunk")
        self.config = config
        self.reduce = {
            name: ConvLayer(tap_channels[name], config.channels, 1, rng=rng)
            for name in config.taps
        }
        if config.freeze_reduce:
            for layer in self.reduce.values():
                layer.freeze()

    @property
    def out_channels(self) -> int:
        return self.config.output_channels

    def forward(self, taps: TapSet) -> Tensor:
        return fuse_taps(taps, self.config.taps, self.reduce, self.config.mode)
