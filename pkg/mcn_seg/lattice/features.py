"""Bilateral feature construction for image-guided pairwise filtering."""

from __future__ import annotations

import numpy as np

from mcn_seg.config.constants import DESK
from mcn_seg.exceptions import ShapeMismatchError
from mcn_seg.lattice.permutohedral import FeaturePoints


def bilateral_features(
    image: np.ndarray,
    theta_alpha: float = DESK.THETA_ALPHA,
    theta_beta: float = DESK.THETA_BETA,
) -> FeaturePoints:
    """Per-pixel ``(x/θα, y/θα, r/θβ, g/θβ, b/θβ)`` features.

    ``image`` is ``(3, h, w)`` with colours in [0, 1]; colours are scaled
    to 0..255 intensity units before dividing by ``theta_beta``. Points are
    in row-major pixel order, matching a ``(c, h, w) → (h·w, c)`` reshape.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeMismatchError(
            "bilateral features need a (3, h, w) image", image.shape
        )
    _, h, w = image.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    coords = np.empty((h * w, 5))
    coords[:, 0] = xs.reshape(-1) / theta_alpha
    coords[:, 1] = ys.reshape(-1) / theta_alpha
    coords[:, 2:] = image.reshape(3, -1).T * (255.0 / theta_beta)
    return FeaturePoints(coords)
