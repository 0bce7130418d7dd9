"""PPM (P6) image and PGM (P5) label dumps."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from mcn_seg.exceptions import ShapeMismatchError


def write_image_ppm(path: str | Path, image: np.ndarray) -> Path:
    """Save a ``(3, h, w)`` image in ``[0, 1]`` as binary PPM."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeMismatchError("image must be (3, h, w)", image.shape)
    pixels = np.rint(np.clip(image, 0.0, 1.0) * 255).astype(np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels.transpose(1, 2, 0), "RGB").save(path, format="PPM")
    return path


def write_label_pgm(path: str | Path, label: np.ndarray) -> Path:
    """Save an ``(h, w)`` class-index map as binary PGM (raw indices)."""
    label = np.asarray(label)
    if label.ndim != 2:
        raise ShapeMismatchError("label must be (h, w)", label.shape)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(label.astype(np.uint8), "L").save(path, format="PPM")
    return path


def export_sample(
    directory: str | Path, stem: str, image: np.ndarray, label: np.ndarray
) -> tuple[Path, Path]:
    directory = Path(directory)
    return (
        write_image_ppm(directory / f"{stem}.ppm", image),
        write_label_pgm(directory / f"{stem}.pgm", label),
    )
