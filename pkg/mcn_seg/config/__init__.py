"""Configuration: constants, key=value files and validated settings."""

from mcn_seg.config.constants import DESK, FORMAT, PAPER, TOLERANCES
from mcn_seg.config.kvfile import format_kv, parse_kv, read_kv, write_kv
from mcn_seg.config.settings import (
    PRESETS,
    ArchitectureConfig,
    AugmentConfig,
    ContextVariant,
    DatasetConfig,
    FusionConfig,
    FusionMode,
    MpnSettings,
    OptimizerConfig,
    PipelineConfig,
    RefineConfig,
    RunConfig,
    RuntimeSettings,
    TrunkConfig,
)

__all__ = [
    "DESK",
    "FORMAT",
    "PAPER",
    "PRESETS",
    "TOLERANCES",
    "ArchitectureConfig",
    "AugmentConfig",
    "ContextVariant",
    "DatasetConfig",
    "FusionConfig",
    "FusionMode",
    "MpnSettings",
    "OptimizerConfig",
    "PipelineConfig",
    "RefineConfig",
    "RunConfig",
    "RuntimeSettings",
    "TrunkConfig",
    "format_kv",
    "parse_kv",
    "read_kv",
    "write_kv",
]
