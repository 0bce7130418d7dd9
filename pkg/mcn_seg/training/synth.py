"""Seeded synthetic segmentation data: coloured shapes on texture.

Class 0 is background and class ``k`` is shape type ``k - 1`` (rectangle,
ellipse, triangle, diamond). The image and the label are drawn with the
same PIL geometry in the same order, so the label matches the rendered
pixels exactly, occlusions included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from loguru import logger
from PIL import Image, ImageDraw

from mcn_seg.config.constants import DESK
from mcn_seg.exceptions import DatasetError

SHAPES: tuple[str, ...] = ("rectangle", "ellipse", "triangle", "diamond")
MAX_CLASSES = len(SHAPES) + 1

# Per-class base colours (RGB 0..255); jitter is added per shape.
_BASE_COLOURS = np.array(
    [
        (220, 60, 50),
        (50, 170, 70),
        (60, 80, 220),
        (230, 200, 40),
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class SynthSample:
    """``image`` is ``(3, h, w)`` float32 in ``[0, 1]``; ``label`` ``(h, w)``."""

    image: np.ndarray
    label: np.ndarray
    seed: int

    @property
    def size(self) -> tuple[int, int]:
        return self.label.shape

    @property
    def classes(self) -> set[int]:
        return {int(c) for c in np.unique(self.label)}


def _background(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Low-frequency grey-ish noise upsampled, plus fine grain."""
    coarse = rng.uniform(70, 150, size=(max(2, h // 8), max(2, w // 8), 3))
    tile = Image.fromarray(coarse.astype(np.uint8), "RGB").resize(
        (w, h), Image.Resampling.BILINEAR
    )
    base = np.asarray(tile, dtype=np.float64)
    return np.clip(base + rng.normal(0.0, 6.0, size=base.shape), 0, 255)


def _geometry(
    kind: str, box: tuple[int, int, int, int]
) -> tuple[str, list[tuple[int, int]] | tuple[int, int, int, int]]:
    x0, y0, x1, y1 = box
    cx, cy = (x0 + x1) // 2, (y0 + y1) // 2
    if kind == "triangle":
        return "polygon", [(cx, y0), (x1, y1), (x0, y1)]
    if kind == "diamond":
        return "polygon", [(cx, y0), (x1, cy), (cx, y1), (x0, cy)]
    return kind, box


def _draw(draw: ImageDraw.ImageDraw, kind: str, box, fill) -> None:
    method, geometry = _geometry(kind, box)
    getattr(draw, method)(geometry, fill=fill)


def synth_sample(
    seed: int,
    num_classes: int = DESK.NUM_CLASSES,
    height: int = DESK.IMAGE_SIZE,
    width: int = DESK.IMAGE_SIZE,
    max_shapes: int = DESK.MAX_SHAPES,
) -> SynthSample:
    """Render one sample deterministically from ``seed``."""
    if not 2 <= num_classes <= MAX_CLASSES:
        raise DatasetError(
            f"num_classes must be in [2, {MAX_CLASSES}] "
            f"(background + {len(SHAPES)} shape types), got {num_classes}"
        )
    if min(height, width) < 8:
        raise DatasetError(f"image must be at least 8×8, got {height}×{width}")
    if max_shapes < 1:
        raise DatasetError(f"max_shapes must be >= 1, got {max_shapes}")

    rng = np.random.default_rng(seed)
    canvas = Image.fromarray(_background(rng, height, width).astype(np.uint8), "RGB")
    labels = Image.new("L", (width, height), 0)
    draw_rgb = ImageDraw.Draw(canvas)
    draw_lbl = ImageDraw.Draw(labels)

    count = int(rng.integers(1, max_shapes + 1))
    for _ in range(count):
        cls = int(rng.integers(1, num_classes))
        sh = int(rng.integers(max(4, height // 4), max(5, height // 2) + 1))
        sw = int(rng.integers(max(4, width // 4), max(5, width // 2) + 1))
        y0 = int(rng.integers(0, height - sh + 1))
        x0 = int(rng.integers(0, width - sw + 1))
        box = (x0, y0, x0 + sw - 1, y0 + sh - 1)
        colour = np.clip(_BASE_COLOURS[cls - 1] + rng.normal(0, 15, 3), 0, 255)
        kind = SHAPES[cls - 1]
        _draw(draw_rgb, kind, box, tuple(int(c) for c in colour))
        _draw(draw_lbl, kind, box, cls)

    image = np.asarray(canvas, dtype=np.float64)
    image = image + rng.normal(0.0, 4.0, size=image.shape)
    image = np.clip(image / 255.0, 0.0, 1.0).astype(np.float32)
    return SynthSample(
        image=np.ascontiguousarray(image.transpose(2, 0, 1)),
        label=np.asarray(labels, dtype=np.uint8).copy(),
        seed=seed,
    )


def sample_seeds(seed: int, count: int) -> list[int]:
    """Independent per-sample seeds derived from one dataset seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def synth_dataset(
    seed: int,
    count: int = DESK.DATASET_COUNT,
    num_classes: int = DESK.NUM_CLASSES,
    height: int = DESK.IMAGE_SIZE,
    width: int = DESK.IMAGE_SIZE,
    max_shapes: int = DESK.MAX_SHAPES,
) -> list[SynthSample]:
    """``count`` samples; identical arguments give identical samples."""
    if count < 1:
        raise DatasetError(f"count must be >= 1, got {count}")
    samples = [
        synth_sample(s, num_classes, height, width, max_shapes)
        for s in sample_seeds(seed, count)
    ]
    logger.debug(
        f"synth dataset seed={seed}: {count} samples {height}×{width}, "
        f"K={num_classes}"
    )
    return samples
