"""Checkpoint directories.

A checkpoint holds one ``<state-name>.mcnt`` tensor per parameter and
running statistic, a ``manifest.txt`` (trunk layout, iteration and the
ordered state names) and ``run.cfg`` with the resolved run configuration
needed to rebuild the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from mcn_seg.config.constants import FORMAT
from mcn_seg.config.kvfile import read_kv, split_list, write_kv
from mcn_seg.config.settings import RunConfig
from mcn_seg.exceptions import CheckpointError, ConfigError, TensorFormatError
from mcn_seg.exporters.tensor_io import read_tensor, write_tensor
from mcn_seg.models.pipeline import SegmentationPipeline


@dataclass(frozen=True)
class Checkpoint:
    run: RunConfig
    state: dict[str, np.ndarray]
    iteration: int
    manifest: dict[str, str]


def save_checkpoint(
    directory: str | Path,
    pipeline: SegmentationPipeline,
    run: RunConfig,
    iteration: int,
) -> Path:
    """Write ``pipeline``'s state; existing tensor files are overwritten."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    state = pipeline.state_dict()
    for name, array in state.items():
        write_tensor(directory / f"{name}{FORMAT.TENSOR_SUFFIX}", array)
    trunk = pipeline.config.trunk
    write_kv(
        directory / FORMAT.CHECKPOINT_MANIFEST,
        {
            "stage_widths": trunk.stage_widths,
            "convs_per_stage": trunk.convs_per_stage,
            "fc_channels": trunk.fc_channels,
            "variant": pipeline.config.architecture.variant.value,
            "iteration": iteration,
            "tensors": list(state),
        },
        header="mcn-seg checkpoint manifest",
    )
    run.resolved().save(
        directory / FORMAT.CHECKPOINT_RUN_CONFIG, header="resolved run config"
    )
    logger.info(f"checkpoint at iteration {iteration}: {directory}")
    return directory


def load_checkpoint(directory: str | Path) -> Checkpoint:
    """Read a checkpoint directory.

    Raises:
        CheckpointError: missing directory, manifest, run config or tensor
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise CheckpointError(f"checkpoint directory not found: {directory}")
    manifest_path = directory / FORMAT.CHECKPOINT_MANIFEST
    run_path = directory / FORMAT.CHECKPOINT_RUN_CONFIG
    try:
        manifest = read_kv(manifest_path)
        run = RunConfig.load(run_path)
    except ConfigError as e:
        raise CheckpointError(f"incomplete checkpoint {directory}: {e}") from e

    state: dict[str, np.ndarray] = {}
    for name in split_list(manifest.get("tensors", "")):
        try:
            state[name] = read_tensor(directory / f"{name}{FORMAT.TENSOR_SUFFIX}")
        except TensorFormatError as e:
            raise CheckpointError(str(e)) from e
    try:
        iteration = int(manifest.get("iteration", "0"))
    except ValueError:
        raise CheckpointError(
            f"{manifest_path}: iteration is not an integer"
        ) from None
    return Checkpoint(run=run, state=state, iteration=iteration, manifest=manifest)


def restore_pipeline(directory: str | Path) -> tuple[SegmentationPipeline, RunConfig]:
    """Rebuild the pipeline from ``run.cfg`` and load its tensors."""
    ckpt = load_checkpoint(directory)
    pipeline = SegmentationPipeline.from_run_config(ckpt.run)
    expected = [str(w) for w in pipeline.config.trunk.stage_widths]
    if split_list(ckpt.manifest.get("stage_widths", "")) != expected:
        raise CheckpointError(
            f"manifest stage_widths {ckpt.manifest.get('stage_widths')} do not "
            f"match run config {expected}"
        )
    pipeline.load_state_dict(ckpt.state)
    return pipeline.eval(), ckpt.run
