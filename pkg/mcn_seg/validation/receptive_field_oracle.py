"""Measure receptive fields from gradient support.

The measured field of a stack is the extent of input pixels that receive
a non-zero gradient from a single centre output pixel. For the analytic
comparison the stack is built linear with all-ones weights and zero
biases, so no contribution can cancel.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from mcn_seg.autodiff.tensor import Tape, Tensor, float64_mode
from mcn_seg.nn.layers import ConvLayer
from mcn_seg.nn.receptive_field import (
    LayerStackSpec,
    cumulative_receptive_fields,
    receptive_field,
)


def gradient_support(
    fn: Callable[[Tensor], Tensor],
    shape: tuple[int, int, int, int],
    centre: tuple[int, int] | None = None,
) -> tuple[int, int]:
    """``(rows, cols)`` extent of ``d fn(x)[centre] / dx`` (0 if empty)."""
    n, c, h, w = shape
    cy, cx = centre or (h // 2, w // 2)
    with float64_mode():
        x = Tensor(np.ones(shape), requires_grad=True)
        with Tape() as tape:
            out = fn(x)
        seed = np.zeros(out.shape)
        seed[:, :, cy, cx] = 1.0
        tape.backward(out, seed)
    if x.grad is None:
        return 0, 0
    support = np.abs(x.grad).sum(axis=(0, 1)) > 0
    rows = np.flatnonzero(support.any(axis=1))
    cols = np.flatnonzero(support.any(axis=0))
    if rows.size == 0:
        return 0, 0
    return int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1)


def _ones_stack(spec: LayerStackSpec) -> list[ConvLayer]:
    layers = []
    for layer in spec.layers:
        conv = ConvLayer(1, 1, layer.kernel, layer.dilation)
        conv.weight.data = np.ones_like(conv.weight.data)
        conv.bias.data = np.zeros_like(conv.bias.data)
        layers.append(conv)
    return layers


def measured_receptive_field(spec: LayerStackSpec, size: int | None = None) -> int:
    """Side length of the gradient support of a linear all-ones stack.

    The input is ``size``×``size`` (default ``RF + 1``) with the measured
    output at the centre.
    """
    size = size or receptive_field(spec) + 1
    layers = _ones_stack(spec)

    def stack(x: Tensor) -> Tensor:
        for conv in layers:
            x = conv(x)
        return x

    rows, _ = gradient_support(stack, (1, 1, size, size))
    return rows


@dataclass(frozen=True)
class ReceptiveFieldRow:
    layer: int
    rate: int
    analytic: int
    measured: int | None

    @property
    def matches(self) -> bool:
        return self.measured is None or self.measured == self.analytic


def receptive_field_report(
    rates: Sequence[int],
    widths: Sequence[int] | None = None,
    kernel: int = 3,
    verify: bool = False,
) -> list[ReceptiveFieldRow]:
    """Per-layer cumulative RF, optionally cross-checked by measurement."""
    spec = LayerStackSpec.from_rates(rates, widths, kernel)
    rows = []
    for i, analytic in enumerate(cumulative_receptive_fields(spec)):
        measured = (
            measured_receptive_field(LayerStackSpec(spec.layers[: i + 1]))
            if verify
            else None
        )
        rate = spec.layers[i].dilation
        rows.append(ReceptiveFieldRow(i + 1, rate, analytic, measured))
    return rows
