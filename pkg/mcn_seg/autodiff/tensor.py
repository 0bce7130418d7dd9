"""Rank-4 tensor value type and the reverse-mode recording tape.

A :class:`Tensor` wraps an ``(n, c, h, w)`` numpy array. Operations only
record themselves while a :class:`Tape` is active *and* at least one input
requires a gradient, so inference pays no bookkeeping cost.

Example:
    >>> x = Tensor.randn((1, 2, 4, 4), rng, requires_grad=True)
    >>> with Tape() as tape:
    ...     y = ops.sum_all(ops.relu(x))
    >>> tape.backward(y)
    >>> x.grad.shape
    (1, 2, 4, 4)
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
from loguru import logger

from mcn_seg.exceptions import MCNError, ShapeMismatchError

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]

_state = threading.local()


def default_dtype() -> type[np.floating]:
    """Storage dtype for new tensors on this thread."""
    return np.float64 if getattr(_state, "float64", False) else np.float32


@contextmanager
def float64_mode() -> Iterator[None]:
    """Create and compute tensors in 64-bit precision inside the block."""
    previous = getattr(_state, "float64", False)
    _state.float64 = True
    try:
        yield
    finally:
        _state.float64 = previous


class Tensor:
    """Rank-4 array ``(n, c, h, w)`` with an optional gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad", "name")

    def __init__(
        self,
        data: np.ndarray | Sequence | float,
        requires_grad: bool = False,
        name: str | None = None,
        dtype: type[np.floating] | None = None,
    ):
        array = np.asarray(data, dtype=dtype or default_dtype())
        if array.ndim != 4:
            raise ShapeMismatchError(
                "Tensor data must be rank-4 (n, c, h, w)", array.shape
            )
        self.data = array
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def zeros(cls, shape: tuple[int, int, int, int], **kwargs) -> Tensor:
        return cls(np.zeros(shape), **kwargs)

    @classmethod
    def ones(cls, shape: tuple[int, int, int, int], **kwargs) -> Tensor:
        return cls(np.ones(shape), **kwargs)

    @classmethod
    def full(
        cls, shape: tuple[int, int, int, int], value: float, **kwargs
    ) -> Tensor:
        return cls(np.full(shape, value), **kwargs)

    @classmethod
    def randn(
        cls,
        shape: tuple[int, int, int, int],
        rng: np.random.Generator,
        scale: float = 1.0,
        **kwargs,
    ) -> Tensor:
        return cls(rng.standard_normal(shape) * scale, **kwargs)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[2]

    @property
    def width(self) -> int:
        return self.data.shape[3]

    @property
    def spatial(self) -> tuple[int, int]:
        return self.data.shape[2], self.data.shape[3]

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError("item() needs a single element", self.shape)
        return float(self.data.reshape(-1)[0])

    def detach(self) -> Tensor:
        """Same values, cut from the tape (shares storage)."""
        out = Tensor.__new__(Tensor)
        out.data = self.data
        out.grad = None
        out.requires_grad = False
        out.name = self.name
        return out

    def zero_grad(self) -> None:
        self.grad = None

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return (
            f"Tensor(shape={self.shape}, dtype={self.data.dtype}"
            f"{label}, requires_grad={self.requires_grad})"
        )


@dataclass(slots=True)
class TapeEntry:
    op: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """Ordered record of differentiable operations.

    Entering the tape makes it the recording target for the current thread;
    tapes nest and the innermost one records. A tape is single-writer.
    """

    def __init__(self) -> None:
        self.entries: list[TapeEntry] = []

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def reset(self) -> None:
        self.entries.clear()

    def backward(self, root: Tensor, grad: np.ndarray | None = None) -> None:
        """Propagate ``grad`` (default ones) from ``root`` to every input.

        Leaf tensors (never produced by a recorded op) accumulate into
        ``.grad``; intermediate tensors have ``.grad`` set to their total
        upstream gradient.
        """
        if grad is None:
            grad = np.ones_like(root.data)
        elif grad.shape != root.shape:
            raise ShapeMismatchError(
                "Seed gradient does not match root", grad.shape, root.shape
            )

        tensors: dict[int, Tensor] = {id(root): root}
        pending: dict[int, np.ndarray] = {id(root): grad}

        for entry in reversed(self.entries):
            upstream = pending.pop(id(entry.output), None)
            if upstream is None:
                continue
            entry.output.grad = upstream
            input_grads = entry.backward(upstream)
            for tensor, g in zip(entry.inputs, input_grads, strict=True):
                if g is None or not tensor.requires_grad:
                    continue
                if g.shape != tensor.shape:
                    raise MCNError(
                        f"{entry.op} backward produced gradient {g.shape} "
                        f"for input {tensor.shape}"
                    )
                key = id(tensor)
                tensors[key] = tensor
                if key in pending:
                    pending[key] = pending[key] + g
                else:
                    pending[key] = g

        for key, g in pending.items():
            leaf = tensors[key]
            if not leaf.requires_grad:
                continue
            g = g.astype(leaf.data.dtype, copy=False)
            leaf.grad = g.copy() if leaf.grad is None else leaf.grad + g

        logger.debug(f"backward over {len(self.entries)} tape entries")


def _tape_stack() -> list[Tape]:
    stack = getattr(_state, "tapes", None)
    if stack is None:
        stack = _state.tapes = []
    return stack


def active_tape() -> Tape | None:
    stack = _tape_stack()
    return stack[-1] if stack else None


def record(
    op: str,
    output: np.ndarray,
    inputs: Sequence[Tensor],
    backward: BackwardFn,
) -> Tensor:
    """Wrap ``output`` and record it on the active tape when needed."""
    result = Tensor(output)
    tape = active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        result.requires_grad = True
        tape.entries.append(TapeEntry(op, result, tuple(inputs), backward))
    return result
