"""Training and inference engines."""

from mcn_seg.engines.inference import evaluate, multiscale_infer, predict, scaled_size
from mcn_seg.engines.trainer import StepStats, Trainer, TrainingResult

__all__ = [
    "StepStats",
    "Trainer",
    "TrainingResult",
    "evaluate",
    "multiscale_infer",
    "predict",
    "scaled_size",
]
