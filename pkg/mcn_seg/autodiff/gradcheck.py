"""Central-difference verification of backward rules.

The check projects the op output onto a seeded random direction ``u``, so
one scalar objective ``L = <op(x), u>`` covers every output element. The
analytic gradient of ``L`` comes from one tape replay; the numerical one
from central differences at a seeded sample of input coordinates. Both run
in 64-bit precision.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager

import numpy as np
from loguru import logger

from mcn_seg.autodiff.tensor import Tape, Tensor, float64_mode
from mcn_seg.config.constants import TOLERANCES
from mcn_seg.exceptions import GradientCheckError

# An estimate worse than this relative error triggers the eps/2 retry.
_RETRY_THRESHOLD = 1e-4
_MAX_RESAMPLES = 256


def relative_error(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-6)


@contextmanager
def _promoted(params: Sequence[Tensor]) -> Iterator[None]:
    saved = [(p.data, p.grad, p.requires_grad) for p in params]
    try:
        for p in params:
            p.data = p.data.astype(np.float64)
            p.grad = None
            p.requires_grad = True
        yield
    finally:
        for p, (data, grad, flag) in zip(params, saved, strict=True):
            p.data = data
            p.grad = grad
            p.requires_grad = flag


def finite_diff_check(
    op: Callable[..., Tensor],
    inputs: Tensor | Sequence[Tensor],
    eps: float = TOLERANCES.GRADIENT_EPS,
    *,
    params: Sequence[Tensor] = (),
    samples: int = TOLERANCES.GRADIENT_SAMPLES,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Args:
        op: callable taking the ``inputs`` tensors positionally
        inputs: tensors to differentiate with respect to
        eps: central-difference step
        params: module parameters the op closes over; also checked
        samples: coordinates sampled (``min(samples, total)``)
        seed: RNG seed for the projection and the coordinate sample

    Raises:
        GradientCheckError: a forward evaluation produced NaN/Inf
    """
    if isinstance(inputs, Tensor):
        inputs = [inputs]
    rng = np.random.default_rng(seed)

    with float64_mode(), _promoted(params):
        xs = [
            Tensor(
                np.array(t.data, dtype=np.float64),
                requires_grad=True,
                name=t.name or f"input{i}",
            )
            for i, t in enumerate(inputs)
        ]
        targets: list[Tensor] = [*xs, *params]

        with Tape() as tape:
            out = op(*xs)
        if not out.is_finite():
            raise GradientCheckError("op output is non-finite at the base point")
        direction = rng.standard_normal(out.shape)
        tape.backward(out, direction)
        analytic = [
            (t.grad if t.grad is not None else np.zeros_like(t.data)).reshape(-1)
            for t in targets
        ]

        def objective(where: str) -> float:
            value = float(np.sum(op(*xs).data * direction))
            if not np.isfinite(value):
                raise GradientCheckError(f"non-finite objective at {where}")
            return value

        sizes = np.array([t.data.size for t in targets])
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        total = int(offsets[-1])
        order = rng.permutation(total)
        wanted = min(samples, total)

        worst = 0.0
        checked = 0
        cursor = 0
        resamples = 0
        while checked < wanted and cursor < total:
            flat = int(order[cursor])
            cursor += 1
            which = int(np.searchsorted(offsets, flat, side="right") - 1)
            local = flat - int(offsets[which])
            tensor = targets[which]
            where = f"{tensor.name or 'param'}{np.unravel_index(local, tensor.shape)}"

            a = float(analytic[which][local])
            c1 = _central(tensor, local, eps, objective, where)
            err = relative_error(a, c1)
            if err > _RETRY_THRESHOLD:
                c2 = _central(tensor, local, eps / 2, objective, where)
                err2 = relative_error(a, c2)
                if err2 <= err / 2:
                    err = err2
                elif relative_error(c1, c2) > 0.5 * err:
                    resamples += 1
                    logger.warning(
                        f"gradcheck: {where} straddles a kink, resampling"
                    )
                    if resamples > _MAX_RESAMPLES:
                        break
                    continue
            worst = max(worst, err)
            checked += 1

        if checked < wanted:
            logger.warning(
                f"gradcheck: only {checked}/{wanted} coordinates usable"
            )
    return worst


def _central(
    tensor: Tensor,
    index: int,
    eps: float,
    objective: Callable[[str], float],
    where: str,
) -> float:
    flat = tensor.data.reshape(-1)
    original = flat[index]
    try:
        flat[index] = original + eps
        plus = objective(where)
        flat[index] = original - eps
        minus = objective(where)
    finally:
        flat[index] = original
    return (plus - minus) / (2 * eps)
