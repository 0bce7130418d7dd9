"""Tests for bilateral features and image-guided tensor filters."""

import numpy as np
import pytest

from mcn_seg.autodiff.tensor import Tape, Tensor, float64_mode
from mcn_seg.exceptions import ShapeMismatchError
from mcn_seg.lattice.features import bilateral_features
from mcn_seg.lattice.filters import ExactFilter, LatticeFilter


class TestBilateralFeatures:
    """Test suite for bilateral_features."""

    def test_layout(self, rng):
        """Row-major pixels with scaled position then colour."""
        image = rng.uniform(0, 1, size=(3, 2, 4))
        points = bilateral_features(image, theta_alpha=2.0, theta_beta=5.0)
        assert (points.m, points.d) == (8, 5)
        np.testing.assert_allclose(points.coords[1, :2], [0.5, 0.0])
        np.testing.assert_allclose(points.coords[4, :2], [0.0, 0.5])
        np.testing.assert_allclose(points.coords[5, 2:], image[:, 1, 1] * 51.0)

    def test_needs_rgb(self):
        """Only (3, h, w) images are accepted."""
        with pytest.raises(ShapeMismatchError):
            bilateral_features(np.zeros((1, 4, 4)))


class TestPairwiseFilters:
    """Test suite for LatticeFilter and ExactFilter."""

    @pytest.mark.parametrize("strategy", [LatticeFilter, ExactFilter])
    def test_constant_map_preserved(self, guide_image, strategy):
        """Normalized filters keep constant score maps."""
        bound = strategy().prepare(guide_image)
        out = bound(Tensor.full((1, 2, 8, 8), 3.0))
        assert out.shape == (1, 2, 8, 8)
        np.testing.assert_allclose(out.data, 3.0, atol=1e-4)

    @pytest.mark.parametrize("strategy", [LatticeFilter, ExactFilter])
    def test_backward_is_adjoint(self, rng, guide_image, strategy):
        """The recorded backward applies the transposed operator."""
        bound = strategy().prepare(guide_image)
        with float64_mode(), Tape() as tape:
            x = Tensor(rng.standard_normal((1, 2, 8, 8)), requires_grad=True)
            y = bound(x)
        g = rng.standard_normal(y.shape)
        tape.backward(y, g)
        assert np.sum(y.data * g) == pytest.approx(np.sum(x.data * x.grad), rel=1e-8)

    def test_batch_uses_each_image(self, rng):
        """Each batch item is filtered by its own image's operator."""
        images = rng.uniform(0, 1, size=(2, 3, 6, 6))
        bound = LatticeFilter().prepare(images)
        assert len(bound.operators) == 2
        values = Tensor(np.repeat(rng.standard_normal((1, 1, 6, 6)), 2, axis=0))
        out = bound(values).data
        single = LatticeFilter().prepare(images[1:])(Tensor(values.data[1:])).data
        np.testing.assert_allclose(out[1:], single)

    def test_spatial_mismatch(self, guide_image):
        """Inputs must match the guiding image size."""
        bound = LatticeFilter().prepare(guide_image)
        with pytest.raises(ShapeMismatchError):
            bound(Tensor.zeros((1, 2, 4, 4)))

    def test_images_must_be_rgb_batch(self):
        """prepare() wants (n, 3, h, w)."""
        with pytest.raises(ShapeMismatchError):
            LatticeFilter().prepare(np.zeros((1, 1, 4, 4)))
