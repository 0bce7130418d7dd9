"""mcn-seg - mixed context networks and message passing for segmentation."""

from mcn_seg.config.settings import ContextVariant, RunConfig
from mcn_seg.core.engine import SegmentationEngine
from mcn_seg.models.pipeline import SegmentationPipeline

__version__ = "1.0.0"
__all__ = [
    "ContextVariant",
    "RunConfig",
    "SegmentationEngine",
    "SegmentationPipeline",
]
