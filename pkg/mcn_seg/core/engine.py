"""Main segmentation engine: one facade per command."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from loguru import logger

from mcn_seg.config.settings import RunConfig, RuntimeSettings
from mcn_seg.engines.inference import evaluate
from mcn_seg.engines.trainer import Trainer, TrainingResult
from mcn_seg.exceptions import CheckpointError
from mcn_seg.exporters.checkpoint import restore_pipeline
from mcn_seg.exporters.images import export_sample, write_label_pgm
from mcn_seg.logging_config import add_run_log
from mcn_seg.models.context import context_parameter_counts
from mcn_seg.training.metrics import ConfusionMatrix
from mcn_seg.training.synth import synth_dataset
from mcn_seg.utils.parallel import set_thread_cap
from mcn_seg.validation import filter_benchmark, gradient_suite
from mcn_seg.validation.filter_benchmark import (
    FilterBenchmarkResult,
    run_filter_benchmark,
)
from mcn_seg.validation.gradient_suite import GradCheckRow, run_suite
from mcn_seg.validation.mpn_benefit import MpnBenefitResult, run_mpn_benefit
from mcn_seg.validation.receptive_field_oracle import (
    ReceptiveFieldRow,
    receptive_field_report,
)

# Held-out evaluation images are drawn from a shifted seed stream.
EVAL_SEED_OFFSET = 10_000


@dataclass(frozen=True)
class EvalReport:
    variant: str
    scales: list[float]
    confusion: ConfusionMatrix
    metrics_path: Path

    @property
    def mean_iu(self) -> float:
        return self.confusion.mean_iu()

    @property
    def pixel_acc(self) -> float:
        return self.confusion.pixel_acc()

    def tsv(self) -> str:
        scales = ",".join(f"{s:g}" for s in self.scales)
        row = f"{self.variant}\t{scales}\t{self.mean_iu:.6f}\t{self.pixel_acc:.6f}"
        return "variant\tscales\tmeanIU\tpixelAcc\n" + row + "\n"


@dataclass(frozen=True)
class ReceptiveFieldReport:
    rows: list[ReceptiveFieldRow]
    widths: list[int]
    parameters: list[int]
    report_path: Path

    @property
    def total_parameters(self) -> int:
        return sum(self.parameters)

    @property
    def consistent(self) -> bool:
        return all(row.matches for row in self.rows)

    def tsv(self) -> str:
        lines = ["layer\trate\twidth\trf\tmeasured\tparams"]
        for row, width, params in zip(
            self.rows, self.widths, self.parameters, strict=False
        ):
            measured = "-" if row.measured is None else str(row.measured)
            lines.append(
                f"{row.layer}\t{row.rate}\t{width}\t{row.analytic}\t"
                f"{measured}\t{params}"
            )
        lines.append(f"classifier\t-\t-\t-\t-\t{self.parameters[-1]}")
        lines.append(f"total\t-\t-\t-\t-\t{self.total_parameters}")
        return "\n".join(lines) + "\n"


class SegmentationEngine:
    """Runs commands against one run configuration.

    Every command writes into its own timestamped directory under
    ``out_root`` holding the resolved ``run.cfg``, a ``run.log`` mirror of
    the log stream and the command's data artifacts.

    Args:
        run: Run configuration (CLI overrides already applied)
        out_root: Parent directory for run directories
        log_level: Level of the per-run log file
    """

    def __init__(
        self,
        run: RunConfig,
        out_root: str | Path = "runs",
        log_level: str = "INFO",
    ):
        run.check_paths()
        self.architecture = run.architecture_config_model()
        self.run = run.resolved()
        self.out_root = Path(out_root)
        self.log_level = log_level
        self._log_handlers: list[int] = []
        self.settings = RuntimeSettings.from_env(self.run.deterministic)
        set_thread_cap(self.settings.threads)
        logger.debug(
            f"engine ready: variant={self.run.variant.value} "
            f"threads={self.settings.threads}"
        )

    def create_run_dir(self, command: str) -> Path:
        """Fresh ``<out_root>/<timestamp>-<command>`` with the resolved config."""
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        run_dir = self.out_root / f"{stamp}-{command}"
        suffix = 1
        while run_dir.exists():
            run_dir = self.out_root / f"{stamp}-{command}-{suffix}"
            suffix += 1
        run_dir.mkdir(parents=True)
        self.run.save(run_dir / "run.cfg", header=f"mcn-seg {command}")
        self._log_handlers.append(add_run_log(run_dir, self.log_level))
        logger.info(f"run directory: {run_dir}")
        return run_dir

    def close(self) -> None:
        """Detach the per-run log files."""
        for handler in self._log_handlers:
            logger.remove(handler)
        self._log_handlers.clear()

    def train(self, steps: int | None = None) -> TrainingResult:
        run_dir = self.create_run_dir("train")
        return Trainer(self.run, run_dir).train(steps)

    def evaluate(
        self, checkpoint: str | Path, scales: Sequence[float] | None = None
    ) -> EvalReport:
        """Evaluate a checkpoint on held-out synthetic images.

        Raises:
            CheckpointError: missing or malformed checkpoint directory
        """
        checkpoint = Path(checkpoint)
        if not checkpoint.is_dir():
            raise CheckpointError(f"checkpoint directory not found: {checkpoint}")
        pipeline, trained = restore_pipeline(checkpoint)
        scales = list(scales or self.run.eval_scales)
        data = trained.dataset_config(seed_offset=EVAL_SEED_OFFSET)
        samples = synth_dataset(
            data.seed,
            self.run.eval_count,
            data.num_classes,
            data.image_size,
            data.image_size,
            data.max_shapes,
        )
        run_dir = self.create_run_dir("eval")
        conf = evaluate(pipeline, samples, scales)
        report = EvalReport(
            variant=trained.variant.value,
            scales=scales,
            confusion=conf,
            metrics_path=run_dir / "metrics.tsv",
        )
        report.metrics_path.write_text(report.tsv(), encoding="utf-8")
        logger.info(
            f"eval {report.variant} at {scales}: meanIU={report.mean_iu:.4f} "
            f"pixelAcc={report.pixel_acc:.4f}"
        )
        return report

    def analyze_receptive_field(
        self, verify: bool = False
    ) -> ReceptiveFieldReport:
        arch = self.architecture
        run_dir = self.create_run_dir("analyze-rf")
        report = ReceptiveFieldReport(
            rows=receptive_field_report(arch.rates, arch.widths, verify=verify),
            widths=list(arch.widths),
            parameters=context_parameter_counts(arch),
            report_path=run_dir / "rf.tsv",
        )
        report.report_path.write_text(report.tsv(), encoding="utf-8")
        if not report.consistent:
            logger.error("measured receptive field disagrees with the formula")
        return report

    def filter_demo(
        self, m: int = 400, d: int = 5, seed: int | None = None
    ) -> FilterBenchmarkResult:
        seed = self.run.seed if seed is None else seed
        result = run_filter_benchmark(m, d, seed)
        run_dir = self.create_run_dir("filter-demo")
        (run_dir / "filter.tsv").write_text(
            filter_benchmark.format_table([result]), encoding="utf-8"
        )
        logger.info(
            f"lattice vs exact filter (m={m}, d={d}): "
            f"rel_l2={result.rel_l2:.4f}"
        )
        return result

    def gradcheck(self, seed: int | None = None) -> list[GradCheckRow]:
        seed = self.run.seed if seed is None else seed
        rows = run_suite(gradient_suite.default_cases(seed))
        run_dir = self.create_run_dir("gradcheck")
        (run_dir / "gradcheck.tsv").write_text(
            gradient_suite.format_table(rows), encoding="utf-8"
        )
        return rows

    def mpn_demo(
        self,
        iterations: int | None = None,
        sigma: float | None = None,
        seed: int | None = None,
    ) -> tuple[MpnBenefitResult, Path]:
        """Hand-parameterised MPN on a corrupted synthetic sample."""
        seed = self.run.seed if seed is None else seed
        iterations = self.run.mpn_iterations if iterations is None else iterations
        result = run_mpn_benefit(
            seed,
            num_classes=self.run.num_classes,
            size=self.run.image_size,
            iterations=iterations,
            sigma=sigma,
        )
        run_dir = self.create_run_dir("mpn-demo")
        lines = ["iteration\tmeanIU"] + [
            f"{t}\t{miu:.6f}" for t, miu in enumerate(result.mean_iu)
        ]
        (run_dir / "mpn.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        write_label_pgm(run_dir / "before.pgm", result.before)
        write_label_pgm(run_dir / "after.pgm", result.after)
        if result.image is not None and result.label is not None:
            export_sample(run_dir, "sample", result.image, result.label)
        logger.info(
            f"mpn demo sigma={result.sigma:.3f}: meanIU "
            f"{result.input_mean_iu:.4f} → {result.output_mean_iu:.4f}"
        )
        return result, run_dir
