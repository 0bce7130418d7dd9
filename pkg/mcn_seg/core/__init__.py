"""Command facade over training, evaluation and analysis."""

from mcn_seg.core.engine import (
    EvalReport,
    ReceptiveFieldReport,
    SegmentationEngine,
)

__all__ = ["EvalReport", "ReceptiveFieldReport", "SegmentationEngine"]
