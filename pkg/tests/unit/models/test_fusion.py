"""Tests for tap reduction and fusion."""

import numpy as np
import pytest

from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.settings import FusionConfig, FusionMode
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.models.fusion import TapFusion, fuse_taps
from mcn_seg.models.trunk import TapSet
from mcn_seg.nn.layers import ConvLayer


class TestFuseTaps:
    """Test suite for fuse_taps."""

    def test_single_tap_is_its_reduction(self, small_tensor):
        """One tap: only the 1×1 conv is applied."""
        reducer = ConvLayer(3, 5, 1)
        taps = TapSet([("fc", small_tensor)])
        out = fuse_taps(taps, ["fc"], {"fc": reducer})
        np.testing.assert_array_equal(out.data, reducer(small_tensor).data)

    def test_sum_of_identical_taps(self, small_tensor):
        """Identity reducers on the same tap twice give twice the tap."""
        taps = TapSet([("a", small_tensor), ("b", small_tensor)])
        reducers = {name: ConvLayer(3, 3, 1).set_identity() for name in ("a", "b")}
        out = fuse_taps(taps, ["a", "b"], reducers, FusionMode.SUM)
        np.testing.assert_allclose(out.data, 2 * small_tensor.data, rtol=1e-6)

    def test_concat_stacks_channels(self, rng):
        """Three 21-channel taps concatenate to 63 channels."""
        taps = TapSet(
            (name, Tensor(rng.standard_normal((1, 21, 4, 4)))) for name in "abc"
        )
        reducers = {name: ConvLayer(21, 21, 1) for name in "abc"}
        out = fuse_taps(taps, list("abc"), reducers, FusionMode.CONCAT)
        assert out.shape == (1, 63, 4, 4)

    def test_finer_taps_pooled_to_coarsest(self, rng):
        """A 2× finer tap is average-pooled onto the coarse grid."""
        fine = Tensor(rng.standard_normal((1, 2, 8, 8)))
        coarse = Tensor(rng.standard_normal((1, 2, 4, 4)))
        taps = TapSet([("fine", fine), ("coarse", coarse)])
        reducers = {n: ConvLayer(2, 2, 1).set_identity() for n in taps}
        out = fuse_taps(taps, ["fine", "coarse"], reducers)
        pooled = fine.data.reshape(1, 2, 4, 2, 4, 2).mean(axis=(3, 5))
        np.testing.assert_allclose(out.data, pooled + coarse.data, rtol=1e-5)

    def test_non_integer_ratio(self):
        """Taps must be integer multiples of the coarsest."""
        taps = TapSet(
            [("a", Tensor.zeros((1, 1, 6, 6))), ("b", Tensor.zeros((1, 1, 4, 4)))]
        )
        reducers = {n: ConvLayer(1, 1, 1) for n in taps}
        with pytest.raises(ShapeMismatchError):
            fuse_taps(taps, ["a", "b"], reducers)

    def test_empty_selection(self, small_tensor):
        """At least one tap."""
        with pytest.raises(ConfigError):
            fuse_taps(TapSet([("a", small_tensor)]), [], {})

    def test_missing_reducer(self, small_tensor):
        """Every selected tap needs its reducer."""
        with pytest.raises(ConfigError, match="no reduce layer"):
            fuse_taps(TapSet([("a", small_tensor)]), ["a"], {})


class TestTapFusion:
    """Test suite for TapFusion."""

    def test_output_channels(self):
        """Concat mode multiplies the width by the tap count."""
        config = FusionConfig(taps=["stage2", "fc"], channels=4, mode="concat")
        fusion = TapFusion(config, {"stage2": 8, "fc": 16})
        assert fusion.out_channels == 8
        assert set(fusion.reduce) == {"stage2", "fc"}

    def test_unknown_tap(self):
        """Configured taps must come from the trunk."""
        config = FusionConfig(taps=["stage9"], channels=4)
        with pytest.raises(ConfigError, match="stage9"):
            TapFusion(config, {"stage1": 4, "fc": 8})

    def test_freeze_reduce(self):
        """Frozen reducers are not trainable."""
        config = FusionConfig(taps=["fc"], channels=4, freeze_reduce=True)
        fusion = TapFusion(config, {"fc": 8})
        assert fusion.count_parameters(trainable_only=True) == 0
