"""Centralized constants for mcn-seg.

Full-scale hyperparameters, their desk-scale counterparts, verification
tolerances and file-format constants live here so that no module carries
magic numbers of its own.

Usage:
    from mcn_seg.config.constants import DESK, PAPER, TOLERANCES

    lr = lr_schedule(step, PAPER.BASE_LR, PAPER.LR_FACTOR, DESK.LR_PERIOD)
"""

from dataclasses import dataclass
from typing import Final


@dataclass(frozen=True)
class PaperHyperparameters:
    """Full-scale training values.

    These are the full-scale settings: VGG-sized widths, 448 px crops and
    a 50K-iteration decay period. They are shipped in ``configs/paper.cfg``.
    """

    BASE_LR: Final[float] = 0.01
    MOMENTUM: Final[float] = 0.9
    LR_FACTOR: Final[float] = 0.1
    LR_PERIOD: Final[int] = 50_000
    BATCH_SIZE: Final[int] = 20
    CROP_SIZE: Final[int] = 448
    SCALE_MIN: Final[float] = 0.5
    SCALE_MAX: Final[float] = 1.5
    NEW_LAYER_LR_MULT: Final[float] = 10.0

    CONTEXT_INPUT_CHANNELS: Final[int] = 256
    CONTEXT_WIDTHS: Final[tuple[int, ...]] = (256, 256, 512, 512, 1024, 1024)
    CONTEXT_RATES: Final[tuple[int, ...]] = (1, 2, 4, 8, 16, 32)

    MPN_ITERATIONS: Final[int] = 3
    SCENE_PARSING_CLASSES: Final[int] = 150
    VOC_CLASSES: Final[int] = 21


@dataclass(frozen=True)
class DeskDefaults:
    """CPU-feasible rescaling of the full-scale setup."""

    LR_PERIOD: Final[int] = 500
    BATCH_SIZE: Final[int] = 4
    CROP_SIZE: Final[int] = 64
    STEPS: Final[int] = 2000

    TRUNK_WIDTHS: Final[tuple[int, ...]] = (16, 32, 64)
    CONVS_PER_STAGE: Final[int] = 2
    FC_CHANNELS: Final[int] = 64
    FUSION_TAPS: Final[tuple[str, ...]] = ("stage2", "stage3", "fc")
    FUSION_CHANNELS: Final[int] = 16

    CONTEXT_WIDTHS: Final[tuple[int, ...]] = (16, 16, 32, 32, 64, 64)
    CONTEXT_RATES: Final[tuple[int, ...]] = (1, 2, 4, 8, 16, 32)
    REFINE_WIDTH: Final[int] = 32

    NUM_CLASSES: Final[int] = 3
    DATASET_COUNT: Final[int] = 16
    IMAGE_SIZE: Final[int] = 64
    MAX_SHAPES: Final[int] = 3

    MPN_REDUCED: Final[int] = 32
    THETA_ALPHA: Final[float] = 8.0
    THETA_BETA: Final[float] = 16.0


@dataclass(frozen=True)
class Tolerances:
    """Verification gates used by tests and the gradcheck command."""

    GRADIENT: Final[float] = 1e-3
    LATTICE_GRADIENT: Final[float] = 5e-2
    GRADIENT_EPS: Final[float] = 1e-3
    GRADIENT_SAMPLES: Final[int] = 64
    ORACLE_REL_L2: Final[float] = 0.1
    CONSTANT_PRESERVATION: Final[float] = 1e-4
    ORACLE_MAX_POINTS: Final[int] = 5000
    NORM_EPS: Final[float] = 1e-5
    NORM_MOMENTUM: Final[float] = 0.9


@dataclass(frozen=True)
class FormatConstants:
    """On-disk formats and label conventions."""

    TENSOR_MAGIC: Final[bytes] = b"MCNT"
    TENSOR_VERSION: Final[int] = 1
    IGNORE_LABEL: Final[int] = 255
    CHECKPOINT_MANIFEST: Final[str] = "manifest.txt"
    CHECKPOINT_RUN_CONFIG: Final[str] = "run.cfg"
    TENSOR_SUFFIX: Final[str] = ".mcnt"


PAPER = PaperHyperparameters()
DESK = DeskDefaults()
TOLERANCES = Tolerances()
FORMAT = FormatConstants()
