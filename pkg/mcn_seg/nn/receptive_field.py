"""Analytic receptive field of stride-1 convolution stacks.

For stride 1 every layer widens the field by ``(k - 1) * r``, so a stack
has ``RF = 1 + sum((k - 1) * r)``.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

from mcn_seg.exceptions import ConfigError


@dataclass(frozen=True)
class LayerSpec:
    kernel: int
    dilation: int
    width: int

    def __post_init__(self) -> None:
        if self.kernel < 1 or self.dilation < 1 or self.width < 1:
            raise ConfigError(
                f"layer kernel/dilation/width must be >= 1, got {self}"
            )

    @property
    def growth(self) -> int:
        return (self.kernel - 1) * self.dilation


@dataclass(frozen=True)
class LayerStackSpec:
    """Ordered (kernel, dilation, width) triples, bottom to top."""

    layers: tuple[LayerSpec, ...] = ()

    @classmethod
    def from_rates(
        cls, rates: Iterable[int], widths: Iterable[int] | None = None, kernel: int = 3
    ) -> LayerStackSpec:
        rates = list(rates)
        widths = list(widths) if widths is not None else [1] * len(rates)
        if len(widths) != len(rates):
            raise ConfigError("rates and widths must have equal length")
        return cls(
            tuple(LayerSpec(kernel, r, w) for r, w in zip(rates, widths, strict=True))
        )

    def __len__(self) -> int:
        return len(self.layers)


def receptive_field(spec: LayerStackSpec) -> int:
    """Side length in pixels; an empty stack has RF 1."""
    return 1 + sum(layer.growth for layer in spec.layers)


def cumulative_receptive_fields(spec: LayerStackSpec) -> list[int]:
    """RF after each layer of ``spec``."""
    fields, rf = [], 1
    for layer in spec.layers:
        rf += layer.growth
        fields.append(rf)
    return fields
