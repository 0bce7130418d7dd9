"""Command-line interface for mcn-seg."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from typing import Any, NoReturn

from loguru import logger

from mcn_seg.config.constants import TOLERANCES
from mcn_seg.config.settings import PRESETS, ContextVariant, RunConfig
from mcn_seg.core.engine import SegmentationEngine
from mcn_seg.exceptions import ConfigError, MCNError, NumericalError
from mcn_seg.logging_config import configure_logging
from mcn_seg.validation import filter_benchmark, gradient_suite

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "WARNING", "ERROR")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1, the code for configuration problems."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        print(f"Error: {message}", file=sys.stderr)
        sys.exit(ConfigError.exit_code)


def _variant(value: str) -> ContextVariant:
    try:
        return ContextVariant.parse(value)
    except ConfigError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _boolean(value: str) -> bool:
    key = value.strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _scales(value: str) -> list[float]:
    try:
        scales = [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"scales must be comma-separated numbers, got {value!r}"
        ) from None
    if not scales or any(s <= 0 for s in scales):
        raise argparse.ArgumentTypeError(f"scales must be positive, got {value!r}")
    return scales


def _run_flags() -> argparse.ArgumentParser:
    """Flags shared by every command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="Run config file")
    common.add_argument(
        "--preset",
        choices=sorted(PRESETS),
        help="Named pipeline from the model table",
    )
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument(
        "--out", default="runs", metavar="DIR", help="Parent of run directories"
    )
    common.add_argument(
        "--variant",
        type=_variant,
        metavar="NAME",
        help="Context variant (plain, long_skip, short_skip, mcn, mcn_long_skip)",
    )
    common.add_argument("--steps", type=int, help="Training iterations")
    common.add_argument(
        "--deterministic",
        type=_boolean,
        nargs="?",
        const=True,
        metavar="BOOL",
        help="Single-threaded, bit-reproducible execution",
    )
    return common


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser."""
    parser = _Parser(
        prog="mcn-seg",
        description="Mixed context networks and message passing for segmentation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train the MCN variant for 50 steps
  mcn-seg train --variant mcn --steps 50 --out runs

  # Evaluate a checkpoint at three scales
  mcn-seg eval --checkpoint runs/<run>/checkpoint --scales 0.5,1.0,1.5

  # Receptive field and parameter report, cross-checked by gradients
  mcn-seg analyze-rf --arch configs/paper_architecture.cfg --verify

  # Lattice filter against the exact Gaussian
  mcn-seg filter-demo --m 400 --d 5 --seed 0

  # Gradient checks for every differentiable op
  mcn-seg gradcheck

  # Hand-parameterised MPN on noisy logits
  mcn-seg mpn-demo --iterations 3
        """,
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        type=str.upper,
        choices=LOG_LEVELS,
        help="Console and run-log level",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    common = _run_flags()

    subparsers.add_parser(
        "train", parents=[common], help="Train a pipeline on synthetic data"
    )

    eval_parser = subparsers.add_parser(
        "eval", parents=[common], help="Evaluate a checkpoint"
    )
    eval_parser.add_argument(
        "--checkpoint", required=True, metavar="DIR", help="Checkpoint directory"
    )
    eval_parser.add_argument(
        "--scales", type=_scales, help="Comma-separated inference scales"
    )

    rf_parser = subparsers.add_parser(
        "analyze-rf",
        parents=[common],
        help="Per-layer receptive field and parameter counts",
    )
    rf_parser.add_argument(
        "--arch", metavar="PATH", help="Architecture config to analyze"
    )
    rf_parser.add_argument(
        "--verify",
        action="store_true",
        help="Cross-check every RF against measured gradient support",
    )

    filter_parser = subparsers.add_parser(
        "filter-demo", parents=[common], help="Lattice vs exact Gaussian filter"
    )
    filter_parser.add_argument("--m", type=int, default=400, help="Point count")
    filter_parser.add_argument("--d", type=int, default=5, help="Feature dim")

    subparsers.add_parser(
        "gradcheck", parents=[common], help="Finite-difference gradient checks"
    )

    mpn_parser = subparsers.add_parser(
        "mpn-demo", parents=[common], help="Message passing on noisy logits"
    )
    mpn_parser.add_argument("--iterations", type=int, help="MPN iterations")
    mpn_parser.add_argument(
        "--sigma", type=float, help="Noise scale (default: auto-calibrated)"
    )

    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """Config file, then preset, then individual flag overrides."""
    run = RunConfig.load(args.config) if args.config else RunConfig()
    if args.preset:
        run = run.with_preset(args.preset)
    overrides: dict[str, Any] = {
        key: value
        for key, value in (
            ("seed", args.seed),
            ("variant", args.variant),
            ("steps", args.steps),
            ("deterministic", args.deterministic),
            ("architecture_config", getattr(args, "arch", None)),
        )
        if value is not None
    }
    return run.updated(**overrides) if overrides else run


def handle_train_command(args, engine: SegmentationEngine) -> None:
    """Handle the train command."""
    result = engine.train()
    print(f"Trained {result.steps} steps")
    print(f"  log:        {result.log_path}")
    if result.checkpoint_dir is not None:
        print(f"  checkpoint: {result.checkpoint_dir}")
        print(f"  meanIU:     {result.mean_iu:.4f}")
        print(f"  pixelAcc:   {result.pixel_acc:.4f}")


def handle_eval_command(args, engine: SegmentationEngine) -> None:
    """Handle the eval command."""
    report = engine.evaluate(args.checkpoint, args.scales)
    print(report.tsv(), end="")
    print(f"Metrics written to {report.metrics_path}")


def handle_analyze_rf_command(args, engine: SegmentationEngine) -> None:
    """Handle the analyze-rf command."""
    report = engine.analyze_receptive_field(verify=args.verify)
    print(report.tsv(), end="")
    if not report.consistent:
        raise NumericalError("measured receptive field disagrees with the formula")


def handle_filter_demo_command(args, engine: SegmentationEngine) -> None:
    """Handle the filter-demo command."""
    result = engine.filter_demo(args.m, args.d, args.seed)
    print(filter_benchmark.format_table([result]), end="")
    if result.rel_l2 >= TOLERANCES.ORACLE_REL_L2:
        logger.warning(
            f"relative L2 error {result.rel_l2:.4f} exceeds "
            f"{TOLERANCES.ORACLE_REL_L2}"
        )


def handle_gradcheck_command(args, engine: SegmentationEngine) -> None:
    """Handle the gradcheck command; exits 2 if any op fails."""
    rows = engine.gradcheck(args.seed)
    print(gradient_suite.format_table(rows), end="")
    failed = [row.name for row in rows if not row.passed]
    if failed:
        raise NumericalError(f"gradient check failed for {', '.join(failed)}")


def handle_mpn_demo_command(args, engine: SegmentationEngine) -> None:
    """Handle the mpn-demo command."""
    result, run_dir = engine.mpn_demo(args.iterations, args.sigma, args.seed)
    print("iteration\tmeanIU")
    for t, miu in enumerate(result.mean_iu):
        print(f"{t}\t{miu:.6f}")
    print(f"Noise sigma {result.sigma:.3f}; outputs in {run_dir}")


HANDLERS = {
    "train": handle_train_command,
    "eval": handle_eval_command,
    "analyze-rf": handle_analyze_rf_command,
    "filter-demo": handle_filter_demo_command,
    "gradcheck": handle_gradcheck_command,
    "mpn-demo": handle_mpn_demo_command,
}


def main(argv: Sequence[str] | None = None) -> None:
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return

    configure_logging(level=args.log_level)
    engine: SegmentationEngine | None = None
    try:
        engine = SegmentationEngine(
            load_run_config(args), out_root=args.out, log_level=args.log_level
        )
        HANDLERS[args.command](args, engine)
    except MCNError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(e.exit_code)
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    finally:
        if engine is not None:
            engine.close()


if __name__ == "__main__":
    main()
