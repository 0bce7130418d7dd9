"""Convolutional building blocks and the receptive-field calculator."""

from mcn_seg.nn.functional import (
    NormStatistics,
    avg_pool2,
    bilinear_upsample,
    channel_norm,
    conv2d,
    interpolation_matrix,
    resize_bilinear,
    softmax_cross_entropy,
)
from mcn_seg.nn.layers import (
    ChannelNorm,
    ConvLayer,
    ConvNormRelu,
    Module,
    Parameter,
)
from mcn_seg.nn.receptive_field import (
    LayerSpec,
    LayerStackSpec,
    cumulative_receptive_fields,
    receptive_field,
)

__all__ = [
    "ChannelNorm",
    "ConvLayer",
    "ConvNormRelu",
    "LayerSpec",
    "LayerStackSpec",
    "Module",
    "NormStatistics",
    "Parameter",
    "avg_pool2",
    "bilinear_upsample",
    "channel_norm",
    "conv2d",
    "cumulative_receptive_fields",
    "interpolation_matrix",
    "receptive_field",
    "resize_bilinear",
    "softmax_cross_entropy",
]
