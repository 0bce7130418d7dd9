"""Tensor value type, recording tape and gradient verification."""

from mcn_seg.autodiff.gradcheck import finite_diff_check, relative_error
from mcn_seg.autodiff.ops import (
    add,
    concat_channels,
    mul,
    relu,
    scale,
    slice_channels,
    softmax_channels,
    sub,
    sum_all,
)
from mcn_seg.autodiff.tensor import (
    Tape,
    Tensor,
    active_tape,
    default_dtype,
    float64_mode,
    record,
)

__all__ = [
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "concat_channels",
    "default_dtype",
    "finite_diff_check",
    "float64_mode",
    "mul",
    "record",
    "relative_error",
    "relu",
    "scale",
    "slice_channels",
    "softmax_channels",
    "sub",
    "sum_all",
]
