"""Lattice filtering against the brute-force Gaussian oracle."""

from __future__ import annotations

import time
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from mcn_seg.exceptions import ConfigError
from mcn_seg.lattice.permutohedral import (
    FeaturePoints,
    gaussian_filter_bruteforce,
    lattice_build,
    lattice_filter,
    operator_asymmetry,
    relative_l2,
)

# Dense operator probing is quadratic in memory; skip it above this size.
ASYMMETRY_MAX_POINTS = 400

TSV_COLUMNS = ("m", "d", "build_s", "filter_s", "rel_l2", "asymmetry")


@dataclass(frozen=True)
class FilterBenchmarkResult:
    m: int
    d: int
    build_s: float
    filter_s: float
    rel_l2: float
    asymmetry: float

    def tsv(self) -> str:
        return (
            f"{self.m}\t{self.d}\t{self.build_s:.4f}\t{self.filter_s:.4f}\t"
            f"{self.rel_l2:.6f}\t{self.asymmetry:.6f}"
        )


def random_problem(
    m: int, d: int, seed: int, channels: int = 3
) -> tuple[FeaturePoints, np.ndarray]:
    """Unit-cube features and uniform values."""
    if m < 1 or d < 1:
        raise ConfigError(f"filter benchmark needs m, d >= 1, got m={m} d={d}")
    rng = np.random.default_rng(seed)
    points = FeaturePoints(rng.uniform(0.0, 1.0, size=(m, d)))
    return points, rng.uniform(0.0, 1.0, size=(m, channels))


def run_filter_benchmark(
    m: int = 400,
    d: int = 5,
    seed: int = 0,
    normalize: bool = True,
    scale: float = 1.0,
) -> FilterBenchmarkResult:
    """Time build and filter, and compare against the oracle.

    ``scale`` multiplies the feature coordinates; smaller scales give
    smoother kernels and lower approximation error.
    """
    points, values = random_problem(m, d, seed)
    if scale != 1.0:
        points = FeaturePoints(points.coords * scale)

    start = time.perf_counter()
    lattice = lattice_build(points)
    built = time.perf_counter()
    approx = lattice_filter(lattice, values, normalize=normalize)
    filtered = time.perf_counter()

    exact = gaussian_filter_bruteforce(points, values, normalize=normalize)
    asymmetry = (
        operator_asymmetry(lattice) if m <= ASYMMETRY_MAX_POINTS else float("nan")
    )
    result = FilterBenchmarkResult(
        m=m,
        d=d,
        build_s=built - start,
        filter_s=filtered - built,
        rel_l2=relative_l2(approx, exact),
        asymmetry=asymmetry,
    )
    logger.debug(
        f"filter benchmark m={m} d={d}: rel_l2={result.rel_l2:.4f} "
        f"vertices={lattice.num_vertices}"
    )
    return result


def format_table(results: Sequence[FilterBenchmarkResult]) -> str:
    lines = ["\t".join(TSV_COLUMNS)] + [r.tsv() for r in results]
    return "\n".join(lines) + "\n"
