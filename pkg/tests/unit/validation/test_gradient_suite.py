"""Tests for the finite-difference gradient suite."""

import math

import numpy as np
import pytest

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.constants import TOLERANCES
from mcn_seg.nn.layers import ChannelNorm
from mcn_seg.validation.gradient_suite import (
    GradCheckCase,
    GradCheckRow,
    checked_gradient,
    default_cases,
    format_table,
    run_suite,
)


@pytest.mark.unit
class TestGradCheckRow:
    """Test suite for pass/fail classification."""

    def test_below_tolerance_passes(self):
        row = GradCheckRow("relu", 1e-6, 1e-3)
        assert row.passed
        assert row.status == "pass"

    def test_at_tolerance_fails(self):
        assert not GradCheckRow("relu", 1e-3, 1e-3).passed

    def test_nan_error_fails(self):
        row = GradCheckRow("relu", math.nan, 1e-3)
        assert not row.passed
        assert row.status == "FAIL"


class TestDefaultSuite:
    """Test suite for the standard set of cases."""

    def test_covers_every_op(self):
        names = {case.name for case in default_cases(0)}
        for expected in (
            "conv1x1",
            "conv3x3_r2",
            "channel_norm",
            "bilinear_upsample",
            "softmax_cross_entropy",
            "mcn_block",
            "short_skip_stage",
            "refinement_step",
            "mpn_iteration_exact",
            "crf_rnn_step_exact",
            "lattice_filter",
        ):
            assert expected in names

    def test_lattice_case_uses_looser_tolerance(self):
        cases = {case.name: case for case in default_cases(0)}
        assert cases["lattice_filter"].tolerance > cases["conv1x1"].tolerance

    @pytest.mark.slow
    def test_all_cases_pass(self):
        rows = run_suite(default_cases(0))
        failed = [(r.name, r.error) for r in rows if not r.passed]
        assert failed == []


@pytest.mark.unit
class TestRunSuite:
    """Test suite for running custom cases."""

    def test_failing_case_reported(self):
        rows = run_suite([GradCheckCase("broken", 1e-3, lambda: 0.5)])
        assert rows == [GradCheckRow("broken", 0.5, 1e-3)]
        assert not rows[0].passed

    def test_format_table(self):
        table = format_table(
            [GradCheckRow("add", 2e-7, 1e-3), GradCheckRow("bad", 0.5, 1e-3)]
        )
        lines = table.splitlines()
        assert lines[0] == "op\terror\ttolerance\tstatus"
        assert lines[1].startswith("add\t2.000e-07\t1e-03\tpass")
        assert lines[2].endswith("FAIL")


@pytest.mark.unit
class TestCheckedGradient:
    """Test suite for checked_gradient."""

    def test_norm_statistics_untouched(self, rng):
        norm = ChannelNorm(3)
        x = Tensor(rng.standard_normal((2, 3, 4, 4)), dtype=np.float64)
        error = checked_gradient(norm, [x], norm.parameters())
        assert error < TOLERANCES.GRADIENT
        assert norm.stats.updates == 0
        np.testing.assert_array_equal(norm.stats.mean, np.zeros(3))
        np.testing.assert_array_equal(norm.stats.var, np.ones(3))
        assert norm.training

    def test_plain_callable(self, rng):
        x = Tensor(rng.standard_normal((1, 2, 3, 3)), dtype=np.float64)
        assert checked_gradient(ops.relu, [x]) < TOLERANCES.GRADIENT
