"""Training loop for the segmentation pipeline on synthetic data."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from mcn_seg.autodiff.tensor import Tape, Tensor
from mcn_seg.config.settings import RunConfig
from mcn_seg.engines.inference import evaluate
from mcn_seg.exceptions import NumericalError
from mcn_seg.exporters.checkpoint import save_checkpoint
from mcn_seg.models.pipeline import SegmentationPipeline
from mcn_seg.nn import functional as F
from mcn_seg.training.augment import augment
from mcn_seg.training.metrics import ConfusionMatrix
from mcn_seg.training.optimizer import NesterovSGD
from mcn_seg.training.synth import SynthSample, synth_dataset
from mcn_seg.utils.parallel import parallel_map

LOG_COLUMNS = ("iter", "lr", "loss", "pixelAcc", "meanIU")


@dataclass(frozen=True)
class StepStats:
    iteration: int
    lr: float
    loss: float
    pixel_acc: float
    mean_iu: float

    def tsv(self) -> str:
        return (
            f"{self.iteration}\t{self.lr:.6g}\t{self.loss:.6f}\t"
            f"{self.pixel_acc:.6f}\t{self.mean_iu:.6f}"
        )


@dataclass(frozen=True)
class TrainingResult:
    steps: int
    final_loss: float
    pixel_acc: float
    mean_iu: float
    log_path: Path
    checkpoint_dir: Path | None


def _batch_metrics(scores: Tensor, labels: np.ndarray, k: int) -> tuple[float, float]:
    conf = ConfusionMatrix(k).accumulate(scores.data.argmax(axis=1), labels)
    if conf.total == 0:
        return float("nan"), float("nan")
    return conf.pixel_acc(), conf.mean_iu()


class Trainer:
    """Seeded batch sampling, augmentation and Nesterov updates.

    Args:
        run: Complete run configuration
        out_dir: Directory for ``train.tsv`` and checkpoints
    """

    def __init__(self, run: RunConfig, out_dir: str | Path):
        self.run = run
        self.out_dir = Path(out_dir)
        # The dataset is checked before the (possibly large) model is built.
        data = run.dataset_config()
        self.dataset: list[SynthSample] = synth_dataset(
            data.seed,
            data.count,
            data.num_classes,
            data.image_size,
            data.image_size,
            data.max_shapes,
        )
        self.pipeline = SegmentationPipeline.from_run_config(run)
        self.optimizer = NesterovSGD(
            self.pipeline.parameters(trainable_only=True), run.optimizer_config()
        )
        self.augment_config = run.augment_config()
        self.rng = np.random.default_rng(run.seed)

    @property
    def log_path(self) -> Path:
        return self.out_dir / "train.tsv"

    def sample_batch(self) -> tuple[np.ndarray, np.ndarray]:
        """Augmented ``(images, labels)``; each sample has its own seed."""
        size = self.run.batch_size
        indices = self.rng.integers(0, len(self.dataset), size=size)
        seeds = self.rng.integers(0, 2**32, size=size, dtype=np.uint64)

        def one(job: tuple[int, int]) -> SynthSample:
            index, seed = job
            return augment(
                self.dataset[index],
                np.random.default_rng(int(seed)),
                self.augment_config,
            )

        samples = parallel_map(one, list(zip(indices.tolist(), seeds.tolist())))
        images = np.stack([s.image for s in samples]).astype(np.float32)
        labels = np.stack([s.label for s in samples])
        return images, labels

    def step(self, iteration: int) -> StepStats:
        images, labels = self.sample_batch()
        self.pipeline.train()
        with Tape() as tape:
            scores = self.pipeline(Tensor(images))
            loss = F.softmax_cross_entropy(scores, labels)
        value = loss.item()
        if not np.isfinite(value):
            raise NumericalError(f"non-finite training loss {value}", iteration)
        self.optimizer.zero_grad()
        tape.backward(loss)
        lr = self.optimizer.step(iteration)
        acc, miu = _batch_metrics(scores, labels, self.pipeline.num_classes)
        return StepStats(iteration, lr, value, acc, miu)

    def checkpoint(self, iteration: int, final: bool = False) -> Path:
        name = "checkpoint" if final else f"checkpoint-{iteration:06d}"
        return save_checkpoint(self.out_dir / name, self.pipeline, self.run, iteration)

    def train(self, steps: int | None = None) -> TrainingResult:
        """Run ``steps`` iterations (default ``run.steps``), then evaluate."""
        steps = self.run.steps if steps is None else steps
        self.out_dir.mkdir(parents=True, exist_ok=True)
        every = self.run.checkpoint_every
        report_every = max(1, steps // 20)
        last: StepStats | None = None

        logger.info(
            f"training {self.run.variant.value} for {steps} steps "
            f"(batch {self.run.batch_size}, crop {self.run.crop_size})"
        )
        with self.log_path.open("w", encoding="utf-8") as log:
            log.write("\t".join(LOG_COLUMNS) + "\n")
            for iteration in range(steps):
                last = self.step(iteration)
                log.write(last.tsv() + "\n")
                log.flush()
                if every and (iteration + 1) % every == 0 and iteration + 1 < steps:
                    self.checkpoint(iteration + 1)
                if (iteration + 1) % report_every == 0:
                    logger.info(
                        f"iter {iteration + 1}/{steps} loss={last.loss:.4f} "
                        f"pixelAcc={last.pixel_acc:.4f} lr={last.lr:.3g}"
                    )

        checkpoint_dir = self.checkpoint(steps, final=True) if steps else None
        acc = miu = float("nan")
        if steps:
            conf = evaluate(
                self.pipeline,
                self.dataset[: self.run.eval_count],
                self.run.eval_scales,
            )
            acc, miu = conf.pixel_acc(), conf.mean_iu()
            logger.info(f"train-set eval: meanIU={miu:.4f} pixelAcc={acc:.4f}")
        return TrainingResult(
            steps=steps,
            final_loss=last.loss if last else float("nan"),
            pixel_acc=acc,
            mean_iu=miu,
            log_path=self.log_path,
            checkpoint_dir=checkpoint_dir,
        )
