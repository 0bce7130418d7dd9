"""Elementwise and channel-axis tensor operations with backward rules."""

from __future__ import annotations

import numpy as np

from mcn_seg.autodiff.tensor import Tensor, record
from mcn_seg.exceptions import ShapeMismatchError


def _same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{op} needs identical shapes", a.shape, b.shape)


def concat_channels(*tensors: Tensor) -> Tensor:
    """Concatenate along the channel axis; inputs keep their order."""
    if len(tensors) < 2:
        raise ShapeMismatchError("concat_channels needs at least two tensors")
    first = tensors[0]
    for other in tensors[1:]:
        if (first.n, *first.spatial) != (other.n, *other.spatial):
            raise ShapeMismatchError(
                "concat_channels needs matching n, h, w", first.shape, other.shape
            )
    bounds = np.cumsum([0] + [t.channels for t in tensors])
    out = np.concatenate([t.data for t in tensors], axis=1)

    def backward(g: np.ndarray):
        return [g[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:], strict=True)]

    return record("concat_channels", out, tensors, backward)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Channels ``[start, stop)`` of ``x``."""
    if not 0 <= start < stop <= x.channels:
        raise ShapeMismatchError(
            f"channel slice [{start}, {stop}) outside tensor", x.shape
        )
    out = x.data[:, start:stop].copy()

    def backward(g: np.ndarray):
        full = np.zeros_like(x.data, dtype=g.dtype)
        full[:, start:stop] = g
        return (full,)

    return record("slice_channels", out, (x,), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("add", a, b)
    return record("add", a.data + b.data, (a, b), lambda g: (g, g))


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("sub", a, b)
    return record("sub", a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape("mul", a, b)
    a_data, b_data = a.data, b.data
    return record(
        "mul", a_data * b_data, (a, b), lambda g: (g * b_data, g * a_data)
    )


def scale(x: Tensor, factor: float) -> Tensor:
    return record("scale", x.data * factor, (x,), lambda g: (g * factor,))


def sum_all(x: Tensor) -> Tensor:
    """Sum of every element, as a ``(1, 1, 1, 1)`` tensor."""
    out = np.sum(x.data, dtype=x.data.dtype).reshape(1, 1, 1, 1)
    shape = x.shape

    def backward(g: np.ndarray):
        return (np.broadcast_to(g.reshape(()), shape).copy(),)

    return record("sum_all", out, (x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return record("relu", np.where(mask, x.data, 0), (x,), lambda g: (g * mask,))


def softmax_channels(x: Tensor) -> Tensor:
    """Per-pixel softmax over the channel axis."""
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def backward(g: np.ndarray):
        return (y * (g - (g * y).sum(axis=1, keepdims=True)),)

    return record("softmax_channels", y, (x,), backward)
