"""Desk-scale fully-convolutional backbone with named skip taps.

Stage ``i`` runs ``convs_per_stage`` 3×3 conv+relu layers at resolution
``input / 2^(i-1)`` and exposes its pre-pool activation as tap
``stage{i}``; a 2×2 average pool follows every stage. A 1×1 head after the
last pool gives the ``fc`` tap, the deepest features.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping

import numpy as np
from loguru import logger

from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import TrunkConfig
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.nn import functional as F
from mcn_seg.nn.layers import ConvNormRelu, Module


class TapSet(Mapping[str, Tensor]):
    """Ordered, uniquely named trunk activations."""

    def __init__(self, items: Iterable[tuple[str, Tensor]]):
        self._taps: dict[str, Tensor] = {}
        for name, tensor in items:
            if name in self._taps:
                raise ConfigError(f"duplicate tap name {name!r}")
            self._taps[name] = tensor

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._taps[name]
        except KeyError:
            raise ConfigError(
                f"unknown tap {name!r} (available: {', '.join(self._taps)})"
            ) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._taps)

    def __len__(self) -> int:
        return len(self._taps)

    @property
    def names(self) -> list[str]:
        return list(self._taps)

    def all_finite(self) -> bool:
        return all(t.is_finite() for t in self._taps.values())


def tap_level(name: str, num_stages: int) -> int:
    """Downsampling level of a tap: ``stage{i}`` → ``i-1``, ``fc`` → stages."""
    if name == "fc":
        return num_stages
    if name.startswith("stage") and name[5:].isdigit():
        index = int(name[5:])
        if 1 <= index <= num_stages:
            return index - 1
    raise ConfigError(f"unknown tap {name!r} for a {num_stages}-stage trunk")


class TrunkStage(Module):
    def __init__(
        self,
        c_in: int,
        width: int,
        convs: int,
        use_norm: bool,
        rng: np.random.Generator,
    ):
        super().__init__()
        self.convs = [
            ConvNormRelu(c_in if i == 0 else width, width, 3, 1, use_norm, rng)
            for i in range(convs)
        ]

    def forward(self, x: Tensor) -> Tensor:
        for conv in self.convs:
            x = conv(x)
        return x


class Trunk(Module):
    """Backbone producing a :class:`TapSet` from an ``(n, 3, h, w)`` image."""

    def __init__(self, config: TrunkConfig, rng: np.random.Generator | None = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.config = config
        widths = config.stage_widths
        self.stages = [
            TrunkStage(
                config.in_channels if i == 0 else widths[i - 1],
                width,
                config.convs_per_stage,
                config.use_norm,
                rng,
            )
            for i, width in enumerate(widths)
        ]
        self.fc = ConvNormRelu(
            widths[-1], config.fc_channels, 1, 1, config.use_norm, rng
        )

        if config.freeze_mask:
            for stage, frozen in zip(
                [*self.stages, self.fc], config.freeze_mask, strict=True
            ):
                if frozen:
                    stage.freeze()
        logger.debug(
            f"trunk built: widths={widths} convs/stage={config.convs_per_stage} "
            f"params={self.count_parameters()}"
        )

    @property
    def tap_channels(self) -> dict[str, int]:
        channels = {
            f"stage{i + 1}": w for i, w in enumerate(self.config.stage_widths)
        }
        channels["fc"] = self.config.fc_channels
        return channels

    def forward(self, x: Tensor) -> TapSet:
        return trunk_forward(x, self)


def trunk_forward(x: Tensor, trunk: Trunk) -> TapSet:
    """Run the backbone, returning every stage tap plus ``fc``.

    Raises:
        ShapeMismatchError: spatial size not divisible by ``2^stages``
    """
    cfg = trunk.config
    divisor = cfg.divisibility
    if x.height % divisor or x.width % divisor:
        raise ShapeMismatchError(
            f"trunk input spatial dims must be divisible by {divisor} "
            f"({cfg.num_stages} pooling stages)",
            x.shape,
        )
    if x.channels != cfg.in_channels:
        raise ShapeMismatchError(
            f"trunk expects {cfg.in_channels} input channels", x.shape
        )
    taps: list[tuple[str, Tensor]] = []
    h = x
    for i, stage in enumerate(trunk.stages):
        h = stage(h)
        taps.append((f"stage{i + 1}", h))
        h = F.avg_pool2(h)
    taps.append(("fc", trunk.fc(h)))
    return TapSet(taps)
