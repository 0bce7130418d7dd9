"""Convolution, normalization, resampling and loss operations.

All functions take and return :class:`~mcn_seg.autodiff.Tensor` values
and record backward rules on the active tape. Convolutions are stride 1
with "same" zero padding; the dilated 3×3 is realised by im2col with taps
spaced ``dilation`` pixels apart.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mcn_seg.autodiff.tensor import Tensor, record
from mcn_seg.config.constants import FORMAT, TOLERANCES
from mcn_seg.exceptions import (
    DatasetError,
    ShapeMismatchError,
    StatisticsError,
    UnsupportedKernelError,
)

SUPPORTED_KERNELS = (1, 3)


def _im2col(xp: np.ndarray, k: int, r: int, h: int, w: int) -> np.ndarray:
    n, c = xp.shape[:2]
    cols = np.empty((n, c, k, k, h, w), dtype=xp.dtype)
    for dy in range(k):
        for dx in range(k):
            cols[:, :, dy, dx] = xp[:, :, dy * r : dy * r + h, dx * r : dx * r + w]
    return cols.reshape(n, c * k * k, h * w)


def _col2im(
    cols: np.ndarray, c: int, k: int, r: int, h: int, w: int, pad: int
) -> np.ndarray:
    n = cols.shape[0]
    cols = cols.reshape(n, c, k, k, h, w)
    xp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for dy in range(k):
        for dx in range(k):
            xp[:, :, dy * r : dy * r + h, dx * r : dx * r + w] += cols[:, :, dy, dx]
    return xp[:, :, pad : pad + h, pad : pad + w]


def conv2d(
    x: Tensor, weight: Tensor, bias: Tensor | None = None, dilation: int = 1
) -> Tensor:
    """Same-padded, stride-1 convolution with dilation ``dilation``.

    ``weight`` is ``(c_out, c_in, k, k)`` with ``k`` in {1, 3}; ``bias`` is
    ``(1, c_out, 1, 1)``.
    """
    c_out, c_in, k, k2 = weight.shape
    if k != k2 or k not in SUPPORTED_KERNELS:
        raise UnsupportedKernelError(
            f"kernel {k}x{k2} unsupported (supported: 1x1, 3x3)"
        )
    if dilation < 1:
        raise UnsupportedKernelError(f"dilation must be >= 1, got {dilation}")
    if x.channels != c_in:
        raise ShapeMismatchError(
            "conv2d input channels differ from weight", x.shape, weight.shape
        )
    if bias is not None and bias.shape != (1, c_out, 1, 1):
        raise ShapeMismatchError("conv2d bias shape", bias.shape, (1, c_out, 1, 1))

    n, _, h, w = x.shape
    pad = dilation * (k // 2)
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    cols = _im2col(xp, k, dilation, h, w)
    wmat = weight.data.reshape(c_out, c_in * k * k)
    out = np.matmul(wmat, cols).reshape(n, c_out, h, w)
    if bias is not None:
        out = out + bias.data

    def backward(g: np.ndarray):
        gm = g.reshape(n, c_out, h * w)
        grad_w = np.tensordot(gm, cols, axes=([0, 2], [0, 2])).reshape(weight.shape)
        grad_x = _col2im(np.matmul(wmat.T, gm), c_in, k, dilation, h, w, pad)
        if bias is None:
            return grad_x, grad_w
        return grad_x, grad_w, g.sum(axis=(0, 2, 3)).reshape(1, c_out, 1, 1)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return record(f"conv{k}x{k}_r{dilation}", out, inputs, backward)


@dataclass
class NormStatistics:
    """Running per-channel mean/variance of a normalization layer."""

    channels: int
    momentum: float = TOLERANCES.NORM_MOMENTUM
    mean: np.ndarray = field(init=False)
    var: np.ndarray = field(init=False)
    updates: int = 0

    def __post_init__(self) -> None:
        self.mean = np.zeros(self.channels, dtype=np.float32)
        self.var = np.ones(self.channels, dtype=np.float32)

    def update(self, batch_mean: np.ndarray, batch_var: np.ndarray) -> None:
        m = self.momentum
        self.mean = (m * self.mean + (1 - m) * batch_mean).astype(np.float32)
        self.var = (m * self.var + (1 - m) * batch_var).astype(np.float32)
        self.updates += 1


def channel_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    stats: NormStatistics,
    training: bool,
    eps: float = TOLERANCES.NORM_EPS,
) -> Tensor:
    """Per-channel batch normalization over ``(n, h, w)``.

    Training mode normalizes with batch statistics and folds them into
    ``stats``; eval mode uses the running statistics.

    Raises:
        StatisticsError: eval mode before any training step
    """
    c = x.channels
    if gamma.shape != (1, c, 1, 1) or beta.shape != (1, c, 1, 1):
        raise ShapeMismatchError(
            "channel_norm affine parameters", gamma.shape, beta.shape, x.shape
        )
    data, g_data = x.data, gamma.data

    if training:
        mu = data.mean(axis=(0, 2, 3), keepdims=True)
        centered = data - mu
        var = (centered**2).mean(axis=(0, 2, 3), keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        xhat = centered * inv_std
        stats.update(mu.reshape(-1), var.reshape(-1))
        count = data.size // c

        def backward(g: np.ndarray):
            gx = g * g_data
            grad_x = (
                inv_std
                / count
                * (
                    count * gx
                    - gx.sum(axis=(0, 2, 3), keepdims=True)
                    - xhat * (gx * xhat).sum(axis=(0, 2, 3), keepdims=True)
                )
            )
            return (
                grad_x,
                (g * xhat).sum(axis=(0, 2, 3), keepdims=True),
                g.sum(axis=(0, 2, 3), keepdims=True),
            )

    else:
        if stats.updates == 0:
            raise StatisticsError(
                "channel_norm in eval mode needs running statistics; "
                "run at least one training step first"
            )
        mu = stats.mean.reshape(1, c, 1, 1).astype(data.dtype)
        inv_std = 1.0 / np.sqrt(stats.var.reshape(1, c, 1, 1).astype(data.dtype) + eps)
        xhat = (data - mu) * inv_std

        def backward(g: np.ndarray):
            return (
                g * g_data * inv_std,
                (g * xhat).sum(axis=(0, 2, 3), keepdims=True),
                g.sum(axis=(0, 2, 3), keepdims=True),
            )

    out = xhat * g_data + beta.data
    return record("channel_norm", out, (x, gamma, beta), backward)


def interpolation_matrix(in_size: int, out_size: int) -> np.ndarray:
    """1-D linear interpolation weights, ``align_corners=False``.

    Row ``j`` samples source coordinate ``(j + 0.5) * in/out - 0.5``,
    clamped to the valid range.
    """
    src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, in_size - 1)
    frac = src - lo
    matrix = np.zeros((out_size, in_size))
    rows = np.arange(out_size)
    np.add.at(matrix, (rows, lo), 1.0 - frac)
    np.add.at(matrix, (rows, hi), frac)
    return matrix


def resize_bilinear(x: Tensor, size: tuple[int, int]) -> Tensor:
    """Bilinear resampling of the spatial axes to ``size = (h, w)``."""
    out_h, out_w = size
    if out_h < 1 or out_w < 1:
        raise ShapeMismatchError("resize target must be positive", size)
    if (out_h, out_w) == x.spatial:
        return x
    my = interpolation_matrix(x.height, out_h).astype(x.data.dtype)
    mx = interpolation_matrix(x.width, out_w).astype(x.data.dtype)
    out = np.matmul(np.matmul(my, x.data), mx.T)

    def backward(g: np.ndarray):
        return (np.matmul(np.matmul(my.T, g), mx),)

    return record("resize_bilinear", out, (x,), backward)


def bilinear_upsample(x: Tensor, factor: int) -> Tensor:
    """Upsample by an integer factor; factor 1 returns ``x`` itself."""
    if factor < 1:
        raise ShapeMismatchError(f"upsample factor must be >= 1, got {factor}")
    if factor == 1:
        return x
    return resize_bilinear(x, (x.height * factor, x.width * factor))


def avg_pool2(x: Tensor, factor: int = 2) -> Tensor:
    """Non-overlapping ``factor``×``factor`` average pooling."""
    n, c, h, w = x.shape
    if h % factor or w % factor:
        raise ShapeMismatchError(
            f"avg_pool2 needs spatial dims divisible by {factor}", x.shape
        )
    out = x.data.reshape(n, c, h // factor, factor, w // factor, factor).mean(
        axis=(3, 5)
    )

    def backward(g: np.ndarray):
        spread = np.repeat(np.repeat(g, factor, axis=2), factor, axis=3)
        return (spread / (factor * factor),)

    return record(f"avg_pool{factor}", out, (x,), backward)


def softmax_cross_entropy(
    logits: Tensor, labels: np.ndarray, ignore_label: int = FORMAT.IGNORE_LABEL
) -> Tensor:
    """Mean per-pixel cross-entropy over softmax; ``ignore_label`` skipped.

    ``labels`` is an integer ``(n, h, w)`` array. Returns a ``(1,1,1,1)``
    tensor (zero when no pixel is labelled).
    """
    n, c, h, w = logits.shape
    if labels.shape != (n, h, w):
        raise ShapeMismatchError(
            "labels must be (n, h, w) matching logits", labels.shape, logits.shape
        )
    valid = labels != ignore_label
    if np.any(labels[valid] >= c) or np.any(labels[valid] < 0):
        raise DatasetError(f"label outside [0, {c}) that is not {ignore_label}")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    safe = np.where(valid, labels, 0).astype(np.int64)
    picked = np.take_along_axis(log_p, safe[:, None], axis=1)[:, 0]
    count = int(valid.sum())
    loss = -(picked * valid).sum() / max(count, 1)

    def backward(g: np.ndarray):
        probs = np.exp(log_p)
        np.put_along_axis(
            probs, safe[:, None], np.take_along_axis(probs, safe[:, None], 1) - 1, 1
        )
        scale = g.reshape(()) / max(count, 1)
        return (probs * valid[:, None] * scale,)

    return record(
        "softmax_cross_entropy",
        np.asarray(loss).reshape(1, 1, 1, 1),
        (logits,),
        backward,
    )
