"""Tests for gradient-support receptive field measurement."""

import pytest

from mcn_seg.autodiff import ops
from mcn_seg.nn.receptive_field import LayerStackSpec
from mcn_seg.validation.receptive_field_oracle import (
    ReceptiveFieldRow,
    gradient_support,
    measured_receptive_field,
    receptive_field_report,
)


@pytest.mark.unit
class TestGradientSupport:
    """Test suite for gradient_support."""

    def test_pointwise_op_has_unit_support(self):
        assert gradient_support(ops.relu, (1, 1, 5, 5)) == (1, 1)

    def test_dilated_conv_support(self):
        spec = LayerStackSpec.from_rates([2])
        assert measured_receptive_field(spec) == 5


class TestReceptiveFieldReport:
    """Test suite for the per-layer report."""

    def test_analytic_only(self):
        rows = receptive_field_report([1, 2, 4])
        assert [r.analytic for r in rows] == [3, 7, 15]
        assert [r.rate for r in rows] == [1, 2, 4]
        assert all(r.measured is None for r in rows)
        assert all(r.matches for r in rows)

    @pytest.mark.slow
    def test_full_stack_verified(self):
        rows = receptive_field_report([1, 2, 4, 8, 16, 32], verify=True)
        assert rows[-1].analytic == 127
        assert [r.measured for r in rows] == [3, 7, 15, 31, 63, 127]

    def test_mismatch_detected(self):
        row = ReceptiveFieldRow(layer=1, rate=1, analytic=3, measured=5)
        assert not row.matches
