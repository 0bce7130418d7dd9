"""Nesterov momentum SGD with a step learning-rate schedule.

The update is the Caffe form of Nesterov momentum, which evaluates the
gradient at the stored parameters rather than at an explicit lookahead
point:

    v'  = μ·v − lr·lr_mult·(g + wd·p)
    p  += (1 + μ)·v' − μ·v

It is algebraically the Sutskever recurrence on the lookahead iterate
``p + μ·v``.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from mcn_seg.config.constants import PAPER
from mcn_seg.config.settings import OptimizerConfig
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.nn.layers import Parameter


def lr_schedule(
    iteration: int,
    base: float = PAPER.BASE_LR,
    factor: float = PAPER.LR_FACTOR,
    period: int = PAPER.LR_PERIOD,
) -> float:
    """``base · factor^⌊iteration / period⌋``."""
    if iteration < 0:
        raise ConfigError(f"iteration must be >= 0, got {iteration}")
    if period < 1:
        raise ConfigError(f"lr period must be >= 1, got {period}")
    return base * factor ** (iteration // period)


@dataclass
class OptimizerState:
    """Per-parameter velocity buffers (lazily created as zeros)."""

    momentum: float = PAPER.MOMENTUM
    velocities: list[np.ndarray] = field(default_factory=list)

    def ensure(self, params: Sequence[np.ndarray]) -> None:
        if not self.velocities:
            self.velocities = [np.zeros_like(p, dtype=np.float64) for p in params]
            return
        if len(self.velocities) != len(params):
            raise ShapeMismatchError(
                f"optimizer tracks {len(self.velocities)} parameters, "
                f"got {len(params)}"
            )
        for v, p in zip(self.velocities, params, strict=True):
            if v.shape != p.shape:
                raise ShapeMismatchError("velocity/parameter shape", v.shape, p.shape)


def nesterov_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray | None],
    state: OptimizerState,
    lr: float,
    lr_mults: Sequence[float] | None = None,
    weight_decay: float = 0.0,
) -> None:
    """Update ``params`` and ``state.velocities`` in place.

    A ``None`` gradient (parameter outside the graph) still decays the
    velocity.

    Raises:
        ShapeMismatchError: parameter/gradient/velocity shapes disagree
    """
    if len(grads) != len(params):
        raise ShapeMismatchError(
            f"{len(params)} parameters but {len(grads)} gradients"
        )
    state.ensure(params)
    mu = state.momentum
    mults = lr_mults if lr_mults is not None else [1.0] * len(params)
    for i, (p, g) in enumerate(zip(params, grads, strict=True)):
        if g is None:
            g = np.zeros_like(p)
        elif g.shape != p.shape:
            raise ShapeMismatchError("gradient/parameter shape", g.shape, p.shape)
        step = g + weight_decay * p if weight_decay else g
        v_old = state.velocities[i]
        v_new = mu * v_old - lr * mults[i] * step
        p += ((1.0 + mu) * v_new - mu * v_old).astype(p.dtype, copy=False)
        state.velocities[i] = v_new


class NesterovSGD:
    """Optimizer over a model's trainable :class:`Parameter` list."""

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        self.params = [p for p in params if p.requires_grad]
        self.config = config
        self.state = OptimizerState(momentum=config.momentum)
        logger.debug(
            f"NesterovSGD over {len(self.params)} tensors "
            f"(lr={config.base_lr}, μ={config.momentum}, "
            f"period={config.lr_period})"
        )

    def lr(self, iteration: int) -> float:
        c = self.config
        return lr_schedule(iteration, c.base_lr, c.lr_factor, c.lr_period)

    def step(self, iteration: int) -> float:
        """Apply one update using the parameters' ``.grad``; returns the lr."""
        lr = self.lr(iteration)
        nesterov_step(
            [p.data for p in self.params],
            [p.grad for p in self.params],
            self.state,
            lr,
            [p.lr_mult for p in self.params],
            self.config.weight_decay,
        )
        return lr

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
