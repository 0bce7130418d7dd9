"""Image-guided pairwise filters as differentiable tensor operations.

A :class:`PairwiseFilter` turns a batch of images into a
:class:`BoundFilter`, which filters ``(n, c, h, w)`` tensors over the
bilateral feature space of the matching image. The production strategy
is :class:`LatticeFilter`; :class:`ExactFilter` evaluates the dense
Gaussian exactly and serves as the verification oracle.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from mcn_seg.autodiff.tensor import Tensor, record
from mcn_seg.config.constants import DESK
from mcn_seg.exceptions import ShapeMismatchError
from mcn_seg.lattice.features import bilateral_features
from mcn_seg.lattice.permutohedral import (
    FeaturePoints,
    PermutohedralLattice,
    gaussian_kernel_matrix,
    lattice_build,
    lattice_filter,
)
from mcn_seg.utils.parallel import parallel_map


class FilterOperator(ABC):
    """Linear ``(m, c) → (m, c)`` operator for one image."""

    @abstractmethod
    def apply(self, values: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Filter ``values`` (or apply the adjoint)."""


@dataclass(frozen=True)
class LatticeOperator(FilterOperator):
    lattice: PermutohedralLattice
    normalize: bool

    def apply(self, values: np.ndarray, transpose: bool = False) -> np.ndarray:
        return lattice_filter(self.lattice, values, self.normalize, transpose)


@dataclass(frozen=True)
class ExactOperator(FilterOperator):
    kernel: np.ndarray
    normalize: bool

    def apply(self, values: np.ndarray, transpose: bool = False) -> np.ndarray:
        values = values.astype(np.float64, copy=False)
        if not self.normalize:
            return self.kernel @ values
        weight = self.kernel.sum(axis=1, keepdims=True)
        if transpose:
            return self.kernel.T @ (values / weight)
        return (self.kernel @ values) / weight


class PairwiseFilter(ABC):
    """Strategy producing per-image filter operators."""

    name = "pairwise"

    def __init__(
        self,
        theta_alpha: float = DESK.THETA_ALPHA,
        theta_beta: float = DESK.THETA_BETA,
        normalize: bool = True,
    ):
        self.theta_alpha = theta_alpha
        self.theta_beta = theta_beta
        self.normalize = normalize

    def features(self, image: np.ndarray) -> FeaturePoints:
        return bilateral_features(image, self.theta_alpha, self.theta_beta)

    @abstractmethod
    def operator(self, points: FeaturePoints) -> FilterOperator:
        """Build the operator for one image's feature points."""

    def prepare(self, images: Tensor | np.ndarray) -> BoundFilter:
        """Build one operator per image of an ``(n, 3, h, w)`` batch."""
        data = images.data if isinstance(images, Tensor) else np.asarray(images)
        if data.ndim != 4 or data.shape[1] != 3:
            raise ShapeMismatchError("images must be (n, 3, h, w)", data.shape)
        operators = parallel_map(
            lambda image: self.operator(self.features(image)), list(data)
        )
        return BoundFilter(operators, data.shape[2:], self.name)

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(theta_alpha={self.theta_alpha}, "
            f"theta_beta={self.theta_beta}, normalize={self.normalize})"
        )


class LatticeFilter(PairwiseFilter):
    name = "lattice"

    def operator(self, points: FeaturePoints) -> FilterOperator:
        return LatticeOperator(lattice_build(points), self.normalize)


class ExactFilter(PairwiseFilter):
    name = "exact"

    def operator(self, points: FeaturePoints) -> FilterOperator:
        return ExactOperator(gaussian_kernel_matrix(points), self.normalize)


class BoundFilter:
    """Filter prepared for a specific image batch; reusable across calls."""

    def __init__(
        self,
        operators: Sequence[FilterOperator],
        spatial: tuple[int, int],
        kind: str = "pairwise",
    ):
        self.operators = list(operators)
        self.spatial = tuple(spatial)
        self.kind = kind

    def _run(self, data: np.ndarray, transpose: bool) -> np.ndarray:
        n, c, h, w = data.shape

        def one(i: int) -> np.ndarray:
            values = data[i].reshape(c, h * w).T
            return self.operators[i].apply(values, transpose).T.reshape(c, h, w)

        return np.stack(parallel_map(one, range(n))).astype(data.dtype, copy=False)

    def __call__(self, x: Tensor) -> Tensor:
        if x.spatial != self.spatial or x.n != len(self.operators):
            raise ShapeMismatchError(
                "filter input must match the guiding image batch",
                x.shape,
                (len(self.operators), "*", *self.spatial),
            )
        out = self._run(x.data, transpose=False)
        return record(
            f"{self.kind}_filter",
            out,
            (x,),
            lambda g: (self._run(g, transpose=True),),
        )
