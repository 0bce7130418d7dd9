"""Networks: trunk, tap fusion, context variants, refinement and MPN."""

from mcn_seg.models.context import (
    ContextNetwork,
    McnBlock,
    ShortSkipStage,
    build_architecture,
    context_layer_spec,
    context_parameter_counts,
)
from mcn_seg.models.fusion import TapFusion, fuse_taps
from mcn_seg.models.mpn import (
    CrfRnnParams,
    MemoryEstimate,
    MpnParams,
    crf_rnn_run,
    crf_rnn_step,
    hand_mpn_params,
    memory_estimate,
    mpn_iteration,
    mpn_run,
    mpn_trajectory,
)
from mcn_seg.models.pipeline import SegmentationPipeline, refinement_taps
from mcn_seg.models.refine import (
    RefinePipeline,
    RefineStage,
    refine_pipeline,
    refinement_step,
)
from mcn_seg.models.trunk import TapSet, Trunk, tap_level, trunk_forward

__all__ = [
    "ContextNetwork",
    "CrfRnnParams",
    "McnBlock",
    "MemoryEstimate",
    "MpnParams",
    "RefinePipeline",
    "RefineStage",
    "SegmentationPipeline",
    "ShortSkipStage",
    "TapFusion",
    "TapSet",
    "Trunk",
    "build_architecture",
    "context_layer_spec",
    "context_parameter_counts",
    "crf_rnn_run",
    "crf_rnn_step",
    "fuse_taps",
    "hand_mpn_params",
    "memory_estimate",
    "mpn_iteration",
    "mpn_run",
    "mpn_trajectory",
    "refine_pipeline",
    "refinement_step",
    "refinement_taps",
    "tap_level",
    "trunk_forward",
]
