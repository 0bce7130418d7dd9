"""Tests for the tensor value type and the recording tape."""

import numpy as np
import pytest

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tape, Tensor, active_tape, float64_mode
from mcn_seg.exceptions import ShapeMismatchError


class TestTensor:
    """Test suite for Tensor."""

    def test_requires_rank_four(self):
        """Non rank-4 data is rejected with both shapes in the message."""
        with pytest.raises(ShapeMismatchError, match="rank-4"):
            Tensor(np.zeros((3, 4)))

    def test_shape_accessors(self, small_tensor):
        """n, channels and spatial read the NCHW layout."""
        assert small_tensor.n == 2
        assert small_tensor.channels == 3
        assert small_tensor.spatial == (6, 6)

    def test_default_dtype_is_float32(self):
        """Tensors are float32 outside float64 mode."""
        assert Tensor.zeros((1, 1, 2, 2)).data.dtype == np.float32

    def test_float64_mode(self):
        """float64_mode switches the default dtype and restores it."""
        with float64_mode():
            assert Tensor.ones((1, 1, 2, 2)).data.dtype == np.float64
        assert Tensor.ones((1, 1, 2, 2)).data.dtype == np.float32

    def test_item(self):
        """item() only works on single-element tensors."""
        assert Tensor.full((1, 1, 1, 1), 2.5).item() == 2.5
        with pytest.raises(ShapeMismatchError):
            Tensor.zeros((1, 2, 1, 1)).item()

    def test_detach_shares_storage(self, small_tensor):
        """detach() keeps values but drops gradient tracking."""
        small_tensor.requires_grad = True
        detached = small_tensor.detach()
        assert detached.data is small_tensor.data
        assert not detached.requires_grad


class TestTape:
    """Test suite for Tape."""

    def test_no_recording_without_tape(self, small_tensor):
        """Ops outside a tape produce constants."""
        small_tensor.requires_grad = True
        assert active_tape() is None
        out = ops.relu(small_tensor)
        assert not out.requires_grad

    def test_no_recording_without_grad_inputs(self, small_tensor):
        """Constant inputs are not recorded even inside a tape."""
        with Tape() as tape:
            ops.relu(small_tensor)
        assert len(tape) == 0

    def test_relu_gradient_is_mask(self, rng):
        """d sum(relu(x)) / dx is the positive mask."""
        x = Tensor(rng.standard_normal((1, 2, 3, 3)), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(ops.relu(x))
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, (x.data > 0).astype(np.float32))

    def test_shared_input_accumulates(self, rng):
        """A tensor used twice receives the sum of both paths."""
        x = Tensor(rng.standard_normal((1, 1, 2, 2)), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum_all(ops.add(x, x))
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, np.full(x.shape, 2.0))

    def test_leaf_gradients_accumulate_across_backwards(self, rng):
        """A second backward adds onto existing leaf gradients."""
        x = Tensor(rng.standard_normal((1, 1, 2, 2)), requires_grad=True)
        for _ in range(2):
            with Tape() as tape:
                loss = ops.sum_all(ops.scale(x, 3.0))
            tape.backward(loss)
        np.testing.assert_allclose(x.grad, np.full(x.shape, 6.0))

    def test_seed_shape_must_match(self, rng):
        """The seed gradient must have the root's shape."""
        x = Tensor(rng.standard_normal((1, 1, 2, 2)), requires_grad=True)
        with Tape() as tape:
            y = ops.relu(x)
        with pytest.raises(ShapeMismatchError):
            tape.backward(y, np.ones((1, 1, 3, 3)))

    def test_nested_tapes_record_innermost(self, rng):
        """Only the innermost active tape records."""
        x = Tensor(rng.standard_normal((1, 1, 2, 2)), requires_grad=True)
        with Tape() as outer:
            with Tape() as inner:
                ops.relu(x)
            assert active_tape() is outer
        assert len(inner) == 1
        assert len(outer) == 0
