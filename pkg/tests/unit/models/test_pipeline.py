"""Tests for the end-to-end segmentation network."""

import numpy as np
import pytest

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tape, Tensor
from mcn_seg.config.settings import PRESETS, ContextVariant
from mcn_seg.models.pipeline import SegmentationPipeline, refinement_taps


@pytest.fixture
def image(rng):
    return Tensor(rng.uniform(0, 1, (2, 3, 16, 16)))


class TestRefinementTaps:
    """Test suite for refinement_taps."""

    def test_finer_stage_taps_coarse_to_fine(self, tiny_run):
        """Fused at the fc grid, refinement climbs stage2 then stage1."""
        assert refinement_taps(tiny_run.pipeline_config()) == ["stage2", "stage1"]

    def test_fused_at_stage_grid(self, tiny_run):
        """Fusing at stage2 only leaves stage1 for refinement."""
        run = tiny_run.updated(fusion_taps=["stage2"])
        assert refinement_taps(run.pipeline_config()) == ["stage1"]

    def test_explicit_taps_win(self, tiny_run):
        """Configured refinement taps are used as given."""
        config = tiny_run.pipeline_config()
        config.refine.taps = ["stage1"]
        assert refinement_taps(config) == ["stage1"]


class TestSegmentationPipeline:
    """Test suite for SegmentationPipeline."""

    def test_full_resolution_scores(self, tiny_run, image):
        """Scores come back at image resolution with one channel per class."""
        pipeline = SegmentationPipeline.from_run_config(tiny_run)
        assert pipeline(image).shape == (2, 3, 16, 16)
        assert len(pipeline.refine.stages) == 2

    def test_without_refinement_scores_resized(self, tiny_run, image):
        """Context scores are bilinearly resized when refinement is off."""
        run = tiny_run.updated(refine=False)
        pipeline = SegmentationPipeline.from_run_config(run)
        assert pipeline.refine.stages == []
        assert pipeline.context.head_channels == 3
        assert pipeline(image).shape == (2, 3, 16, 16)

    def test_mpn_attached(self, tiny_run, image):
        """MPN on: reduced channels resolved below the class count."""
        pipeline = SegmentationPipeline.from_run_config(
            tiny_run.updated(mpn=True, mpn_iterations=1)
        )
        assert pipeline.mpn is not None
        assert pipeline.mpn.reduced == 2
        assert "mpn" in pipeline.parameter_report()
        assert pipeline(image).shape == (2, 3, 16, 16)

    @pytest.mark.parametrize("preset", sorted(PRESETS))
    def test_presets_build(self, tiny_run, preset):
        """Every model-table row builds on the tiny configuration."""
        pipeline = SegmentationPipeline.from_preset(preset, tiny_run)
        expected = ContextVariant.parse(PRESETS[preset]["variant"])
        assert pipeline.context.variant is expected
        assert (pipeline.mpn is not None) == PRESETS[preset]["mpn"]

    def test_new_layer_multiplier(self, tiny_run):
        """Only layers after the trunk get the new-layer multiplier."""
        pipeline = SegmentationPipeline.from_run_config(
            tiny_run.updated(new_layer_lr_mult=10.0)
        )
        assert all(p.lr_mult == 1.0 for p in pipeline.trunk.parameters())
        assert all(p.lr_mult == 10.0 for p in pipeline.context.parameters())

    def test_same_seed_same_output(self, tiny_run, image):
        """Construction is a function of the seed."""
        a = SegmentationPipeline.from_run_config(tiny_run)(image).data
        b = SegmentationPipeline.from_run_config(tiny_run)(image).data
        np.testing.assert_array_equal(a, b)

    def test_backward_end_to_end(self, tiny_run, image):
        """A loss on the output reaches the trunk weights."""
        pipeline = SegmentationPipeline.from_run_config(tiny_run)
        with Tape() as tape:
            loss = ops.sum_all(pipeline(image))
        tape.backward(loss)
        assert pipeline.trunk.stages[0].convs[0].conv.weight.grad is not None

    def test_parameter_report_sums(self, tiny_run):
        """The per-component report covers every parameter."""
        pipeline = SegmentationPipeline.from_run_config(tiny_run)
        report = pipeline.parameter_report()
        assert sum(report.values()) == pipeline.count_parameters()
