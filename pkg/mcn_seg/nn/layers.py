"""Parameterised building blocks.

:class:`Module` discovers parameters, sub-modules and normalization
statistics from instance attributes (including lists and dicts of
modules), in attribute-definition order, so state dicts have stable,
human-readable keys such as ``context.blocks.2.merge.weight``.
"""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager

import numpy as np

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.exceptions import (
    CheckpointError,
    ShapeMismatchError,
    UnsupportedKernelError,
)
from mcn_seg.nn import functional as F


class Parameter(Tensor):
    """A trainable tensor with a per-parameter learning-rate multiplier."""

    __slots__ = ("lr_mult",)

    def __init__(self, data: np.ndarray, name: str | None = None):
        super().__init__(data, requires_grad=True, name=name, dtype=np.float32)
        self.lr_mult = 1.0


class Module:
    """Base class for layers and networks."""

    def __init__(self) -> None:
        self.training = True

    def forward(self, *args, **kwargs) -> Tensor:
        raise NotImplementedError

    def __call__(self, *args, **kwargs) -> Tensor:
        return self.forward(*args, **kwargs)

    def _children(self) -> Iterator[tuple[str, object]]:
        for key, value in vars(self).items():
            if isinstance(value, (Parameter, Module, F.NormStatistics)):
                yield key, value
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{key}.{i}", item
            elif isinstance(value, dict):
                for name, item in value.items():
                    if isinstance(item, Module):
                        yield f"{key}.{name}", item

    def named_modules(self, prefix: str = "") -> Iterator[tuple[str, Module]]:
        yield prefix, self
        for key, value in self._children():
            if isinstance(value, Module):
                yield from value.named_modules(f"{prefix}{key}.")

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, value in self._children():
            if isinstance(value, Parameter):
                yield f"{prefix}{key}", value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{key}.")

    def named_statistics(
        self, prefix: str = ""
    ) -> Iterator[tuple[str, F.NormStatistics]]:
        for key, value in self._children():
            if isinstance(value, F.NormStatistics):
                yield f"{prefix}{key}", value
            elif isinstance(value, Module):
                yield from value.named_statistics(f"{prefix}{key}.")

    @contextmanager
    def frozen_statistics(self) -> Iterator[Module]:
        """Restore every running mean/variance on exit.

        Training-mode forwards inside the block still normalize with batch
        statistics; only their updates are discarded.
        """
        saved = [
            (stats, stats.mean.copy(), stats.var.copy(), stats.updates)
            for _, stats in self.named_statistics()
        ]
        try:
            yield self
        finally:
            for stats, mean, var, updates in saved:
                stats.mean, stats.var, stats.updates = mean, var, updates

    def parameters(self, trainable_only: bool = False) -> list[Parameter]:
        return [
            p
            for _, p in self.named_parameters()
            if p.requires_grad or not trainable_only
        ]

    def count_parameters(self, trainable_only: bool = False) -> int:
        return sum(p.data.size for p in self.parameters(trainable_only))

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def train(self, mode: bool = True) -> Module:
        for _, module in self.named_modules():
            module.training = mode
        return self

    def eval(self) -> Module:
        return self.train(False)

    def freeze(self) -> Module:
        for p in self.parameters():
            p.requires_grad = False
        return self

    def set_lr_mult(self, mult: float) -> Module:
        for p in self.parameters():
            p.lr_mult = mult
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        """Parameters plus running statistics as plain arrays."""
        state = {name: p.data for name, p in self.named_parameters()}
        for name, stats in self.named_statistics():
            state[f"{name}.mean"] = stats.mean.reshape(1, -1, 1, 1)
            state[f"{name}.var"] = stats.var.reshape(1, -1, 1, 1)
            state[f"{name}.updates"] = np.full((1, 1, 1, 1), stats.updates, np.float32)
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy values in; names and shapes must match exactly."""
        expected = self.state_dict()
        missing = sorted(set(expected) - set(state))
        unexpected = sorted(set(state) - set(expected))
        if missing or unexpected:
            raise CheckpointError(
                f"state mismatch: missing={missing[:5]} unexpected={unexpected[:5]}"
            )
        for name, p in self.named_parameters():
            if state[name].shape != p.shape:
                raise CheckpointError(
                    f"{name}: checkpoint shape {state[name].shape} != {p.shape}"
                )
            p.data = np.array(state[name], dtype=np.float32)
        for name, stats in self.named_statistics():
            stats.mean = np.array(state[f"{name}.mean"], np.float32).reshape(-1)
            stats.var = np.array(state[f"{name}.var"], np.float32).reshape(-1)
            stats.updates = int(np.asarray(state[f"{name}.updates"]).reshape(-1)[0])


class ConvLayer(Module):
    """Same-padded stride-1 convolution, kernel 1 or 3, with dilation."""

    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel_size: int = 3,
        dilation: int = 1,
        bias: bool = True,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        if kernel_size not in F.SUPPORTED_KERNELS:
            raise UnsupportedKernelError(
                f"kernel {kernel_size} unsupported (supported: 1, 3)"
            )
        rng = rng or np.random.default_rng(0)
        std = np.sqrt(2.0 / (c_in * kernel_size * kernel_size))
        self.weight = Parameter(
            rng.standard_normal((c_out, c_in, kernel_size, kernel_size)) * std,
            name="weight",
        )
        self.bias = Parameter(np.zeros((1, c_out, 1, 1)), name="bias") if bias else None
        self.dilation = dilation
        self.kernel_size = kernel_size

    @property
    def c_in(self) -> int:
        return self.weight.shape[1]

    @property
    def c_out(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, self.dilation)

    def set_identity(self) -> ConvLayer:
        """Identity mapping (1×1, or 3×3 centre tap); needs c_in == c_out."""
        if self.c_in != self.c_out:
            raise ShapeMismatchError(
                "identity needs equal channel counts", self.weight.shape
            )
        w = np.zeros(self.weight.shape, dtype=np.float32)
        centre = self.kernel_size // 2
        w[np.arange(self.c_out), np.arange(self.c_in), centre, centre] = 1.0
        self.weight.data = w
        if self.bias is not None:
            self.bias.data = np.zeros_like(self.bias.data)
        return self

    def zero_(self) -> ConvLayer:
        self.weight.data = np.zeros_like(self.weight.data)
        if self.bias is not None:
            self.bias.data = np.zeros_like(self.bias.data)
        return self

    def __repr__(self) -> str:
        k = self.kernel_size
        return f"ConvLayer({self.c_in}->{self.c_out}, {k}x{k}, r={self.dilation})"


class ChannelNorm(Module):
    """Learnable affine per-channel batch normalization."""

    def __init__(self, channels: int):
        super().__init__()
        self.gamma = Parameter(np.ones((1, channels, 1, 1)), name="gamma")
        self.beta = Parameter(np.zeros((1, channels, 1, 1)), name="beta")
        self.stats = F.NormStatistics(channels)

    def forward(self, x: Tensor) -> Tensor:
        return F.channel_norm(x, self.gamma, self.beta, self.stats, self.training)


class ConvNormRelu(Module):
    """conv → optional channel norm → relu."""

    def __init__(
        self,
        c_in: int,
        c_out: int,
        kernel_size: int = 3,
        dilation: int = 1,
        use_norm: bool = False,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        self.conv = ConvLayer(c_in, c_out, kernel_size, dilation, rng=rng)
        self.norm = ChannelNorm(c_out) if use_norm else None

    @property
    def c_out(self) -> int:
        return self.conv.c_out

    def forward(self, x: Tensor) -> Tensor:
        y = self.conv(x)
        if self.norm is not None:
            y = self.norm(y)
        return ops.relu(y)
