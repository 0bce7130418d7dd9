"""Tests for the training loop."""

import math
from pathlib import Path

import numpy as np
import pytest

from mcn_seg.config.settings import RunConfig
from mcn_seg.engines.trainer import LOG_COLUMNS, Trainer
from mcn_seg.exceptions import DatasetError

CONFIGS = Path(__file__).resolve().parents[3] / "configs"


@pytest.mark.unit
class TestTrainer:
    """Test suite for Trainer."""

    def test_batch_shapes(self, tiny_run, tmp_path):
        images, labels = Trainer(tiny_run, tmp_path).sample_batch()
        assert images.shape == (2, 3, 16, 16)
        assert images.dtype == np.float32
        assert labels.shape == (2, 16, 16)

    def test_reference_paper_config_rejected_early(self, tmp_path):
        """21 classes exceed the synthetic generator; no model is built."""
        paper = RunConfig.load(CONFIGS / "paper.cfg").resolved()
        with pytest.raises(DatasetError, match="num_classes"):
            Trainer(paper, tmp_path)

    def test_batches_are_seeded(self, tiny_run, tmp_path):
        a = Trainer(tiny_run, tmp_path / "a").sample_batch()
        b = Trainer(tiny_run, tmp_path / "b").sample_batch()
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_step_updates_parameters(self, tiny_run, tmp_path):
        trainer = Trainer(tiny_run, tmp_path)
        before = {k: v.copy() for k, v in trainer.pipeline.state_dict().items()}
        stats = trainer.step(0)
        after = trainer.pipeline.state_dict()
        assert math.isfinite(stats.loss)
        assert stats.lr == pytest.approx(tiny_run.base_lr)
        assert any(not np.array_equal(before[k], after[k]) for k in before)

    def test_train_writes_log_and_checkpoint(self, tiny_run, tmp_path):
        result = Trainer(tiny_run, tmp_path).train()
        lines = result.log_path.read_text(encoding="utf-8").splitlines()
        assert lines[0].split("\t") == list(LOG_COLUMNS)
        assert len(lines) == 1 + tiny_run.steps
        assert [line.split("\t")[0] for line in lines[1:]] == ["0", "1", "2"]
        assert result.checkpoint_dir == tmp_path / "checkpoint"
        assert (result.checkpoint_dir / "manifest.txt").is_file()
        assert 0.0 <= result.mean_iu <= 1.0

    def test_periodic_checkpoints(self, tiny_run, tmp_path):
        run = tiny_run.updated(checkpoint_every=1)
        Trainer(run, tmp_path).train()
        names = sorted(p.name for p in tmp_path.glob("checkpoint*"))
        assert names == ["checkpoint", "checkpoint-000001", "checkpoint-000002"]

    def test_zero_steps(self, tiny_run, tmp_path):
        result = Trainer(tiny_run, tmp_path).train(steps=0)
        assert result.checkpoint_dir is None
        assert math.isnan(result.final_loss)
