"""Context modules: plain dilated stack, long/short skip and MCN.

All variants are stride 1 with same padding, so the score map keeps the
resolution of the input features. Rates double layer over layer.

    plain       x → [relu(dil_i)]* → classifier
    long_skip   x → [relu(dil_i)]* → concat(x, ·) → classifier
    short_skip  x → [relu(adjust_i(concat(x_i, relu(dil_i(x_i)))))]* → classifier
    mcn         x → [relu(merge_i(concat(relu(dil_i), relu(par_i))))]* → classifier
    mcn_long_skip  mcn, then concat with x before the classifier
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import ArchitectureConfig, ContextVariant
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.nn.layers import ConvLayer, ConvNormRelu, Module
from mcn_seg.nn.receptive_field import LayerStackSpec


class McnBlock(Module):
    """Parallel dilated 3×3 and 1×1 paths merged by a 1×1 conv."""

    def __init__(
        self,
        c_in: int,
        width: int,
        rate: int,
        use_norm: bool = False,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        self.dilated = ConvNormRelu(c_in, width, 3, rate, use_norm, rng)
        self.parallel = ConvNormRelu(c_in, width, 1, 1, use_norm, rng)
        self.merge = ConvLayer(2 * width, width, 1, rng=rng)

    @property
    def c_out(self) -> int:
        return self.merge.c_out

    def forward(self, x: Tensor) -> Tensor:
        mixed = ops.concat_channels(self.dilated(x), self.parallel(x))
        return ops.relu(self.merge(mixed))


class ShortSkipStage(Module):
    """Dilated conv whose input and output are concatenated and adjusted."""

    def __init__(
        self,
        c_in: int,
        width: int,
        rate: int,
        use_norm: bool = False,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        self.dilated = ConvNormRelu(c_in, width, 3, rate, use_norm, rng)
        self.adjust = ConvLayer(c_in + width, width, 1, rng=rng)

    @property
    def c_out(self) -> int:
        return self.adjust.c_out

    def forward(self, x: Tensor) -> Tensor:
        return ops.relu(self.adjust(ops.concat_channels(x, self.dilated(x))))


class ContextNetwork(Module):
    """One of the five context-module variants plus its 1×1 head.

    ``head_channels`` overrides the head width (refinement consumes
    features rather than class scores); by default the head emits
    ``num_classes`` scores.
    """

    def __init__(
        self,
        config: ArchitectureConfig,
        rng: np.random.Generator | None = None,
        head_channels: int | None = None,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.config = config
        self.variant = ContextVariant.parse(config.variant)

        c = config.input_channels
        layers: list[Module] = []
        for width, rate in zip(config.widths, config.rates, strict=True):
            if self.variant.uses_mcn_blocks:
                layers.append(McnBlock(c, width, rate, config.use_norm, rng))
            elif self.variant is ContextVariant.SHORT_SKIP:
                layers.append(ShortSkipStage(c, width, rate, config.use_norm, rng))
            else:
                layers.append(ConvNormRelu(c, width, 3, rate, config.use_norm, rng))
            c = width
        self.layers = layers

        self.feature_channels = (
            config.input_channels + c if self.variant.has_long_skip else c
        )
        self.head_channels = head_channels or config.num_classes
        self.classifier = ConvLayer(
            self.feature_channels, self.head_channels, 1, rng=rng
        )

    def features(self, x: Tensor) -> Tensor:
        """Context features before the classifier."""
        if x.channels != self.config.input_channels:
            raise ShapeMismatchError(
                f"context network expects {self.config.input_channels} channels",
                x.shape,
            )
        h = x
        for layer in self.layers:
            h = layer(h)
        if self.variant.has_long_skip:
            h = ops.concat_channels(x, h)
        return h

    def forward(self, x: Tensor) -> Tensor:
        return self.classifier(self.features(x))

    def layer_spec(self) -> LayerStackSpec:
        return context_layer_spec(self.config)


def build_architecture(
    config: ArchitectureConfig,
    rng: np.random.Generator | None = None,
    head_channels: int | None = None,
) -> ContextNetwork:
    """Build the configured context variant.

    Raises:
        ConfigError: unknown variant
    """
    if not isinstance(config.variant, ContextVariant):
        raise ConfigError(f"unknown variant {config.variant!r}")
    net = ContextNetwork(config, rng, head_channels)
    logger.debug(
        f"context network {net.variant.value}: widths={config.widths} "
        f"rates={config.rates} params={net.count_parameters()}"
    )
    return net


def context_parameter_counts(
    config: ArchitectureConfig, head_channels: int | None = None
) -> list[int]:
    """Per-layer parameter counts plus the classifier, without building.

    Every conv has ``c_out·c_in·k² + c_out`` parameters and every norm
    ``2·c_out``.
    """
    variant = ContextVariant.parse(config.variant)

    def conv(c_in: int, c_out: int, k: int, norm: bool = False) -> int:
        return c_out * c_in * k * k + c_out + (2 * c_out if norm else 0)

    norm = config.use_norm
    counts = []
    c = config.input_channels
    for width in config.widths:
        if variant.uses_mcn_blocks:
            n = conv(c, width, 3, norm) + conv(c, width, 1, norm)
            n += conv(2 * width, width, 1)
        elif variant is ContextVariant.SHORT_SKIP:
            n = conv(c, width, 3, norm) + conv(c + width, width, 1)
        else:
            n = conv(c, width, 3, norm)
        counts.append(n)
        c = width
    features = config.input_channels + c if variant.has_long_skip else c
    counts.append(conv(features, head_channels or config.num_classes, 1))
    return counts


def context_layer_spec(config: ArchitectureConfig) -> LayerStackSpec:
    """Dilated 3×3 layers of the module (1×1 convs do not widen the RF)."""
    return LayerStackSpec.from_rates(config.rates, config.widths)
