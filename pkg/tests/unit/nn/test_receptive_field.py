"""Tests for analytic receptive fields."""

import pytest

from mcn_seg.exceptions import ConfigError
from mcn_seg.nn.receptive_field import (
    LayerSpec,
    LayerStackSpec,
    cumulative_receptive_fields,
    receptive_field,
)
from mcn_seg.validation.receptive_field_oracle import measured_receptive_field


class TestReceptiveField:
    """Test suite for receptive_field."""

    @pytest.mark.parametrize(
        "rates, expected",
        [
            ((1,), 3),
            ((1, 2), 7),
            ((1, 2, 4), 15),
            ((1, 2, 4, 8, 16, 32), 127),
        ],
    )
    def test_doubling_rates(self, rates, expected):
        """3×3 layers with doubling rates."""
        assert receptive_field(LayerStackSpec.from_rates(rates)) == expected

    def test_empty_stack(self):
        """No layers: a single pixel."""
        assert receptive_field(LayerStackSpec()) == 1

    def test_pointwise_layers_do_not_widen(self):
        """1×1 convs contribute nothing."""
        spec = LayerStackSpec((LayerSpec(1, 1, 8), LayerSpec(3, 2, 8)))
        assert receptive_field(spec) == 5

    def test_cumulative(self):
        """Running RF after each layer."""
        spec = LayerStackSpec.from_rates([1, 2, 4])
        assert cumulative_receptive_fields(spec) == [3, 7, 15]

    @pytest.mark.parametrize("rates", [(1,), (1, 2, 4), (2, 2, 3)])
    def test_matches_gradient_support(self, rates):
        """Formula equals the measured support of an all-ones stack."""
        spec = LayerStackSpec.from_rates(rates)
        assert measured_receptive_field(spec) == receptive_field(spec)

    def test_invalid_layer(self):
        """Kernel, dilation and width must be positive."""
        with pytest.raises(ConfigError):
            LayerSpec(3, 0, 8)

    def test_widths_length(self):
        """One width per rate."""
        with pytest.raises(ConfigError):
            LayerStackSpec.from_rates([1, 2], [4])
