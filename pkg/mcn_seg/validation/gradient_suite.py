"""Finite-difference checks for every differentiable operation.

Each case builds a small random instance of one op (or composite block),
then reports the worst relative error between its backward rule and
central differences. Lattice-backed filtering has the looser tolerance.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np
from loguru import logger

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.gradcheck import finite_diff_check
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.constants import TOLERANCES
from mcn_seg.lattice.filters import ExactFilter, LatticeFilter
from mcn_seg.models.context import McnBlock, ShortSkipStage
from mcn_seg.models.mpn import CrfRnnParams, MpnParams, crf_rnn_step, mpn_iteration
from mcn_seg.models.refine import RefineStage, refinement_step
from mcn_seg.nn import functional as F
from mcn_seg.nn.layers import ChannelNorm, ConvLayer, Module


@dataclass(frozen=True)
class GradCheckCase:
    name: str
    tolerance: float
    run: Callable[[], float]


@dataclass(frozen=True)
class GradCheckRow:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error)) and self.error < self.tolerance

    @property
    def status(self) -> str:
        return "pass" if self.passed else "FAIL"


def _randn(rng: np.random.Generator, shape: tuple[int, ...]) -> Tensor:
    return Tensor(rng.standard_normal(shape), dtype=np.float64)


def _image(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=(1, 3, h, w))


def checked_gradient(
    op: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    params: Sequence[Tensor] = (),
    seed: int = 0,
) -> float:
    """:func:`finite_diff_check` that leaves running norm statistics as found."""
    guard = op.frozen_statistics() if isinstance(op, Module) else nullcontext()
    with guard:
        return finite_diff_check(op, list(inputs), params=list(params), seed=seed)


def default_cases(seed: int = 0) -> list[GradCheckCase]:
    """The standard suite, one case per op or block."""
    rng = np.random.default_rng(seed)
    tol = TOLERANCES.GRADIENT
    cases: list[GradCheckCase] = []

    def add(name: str, run: Callable[[], float], tolerance: float = tol) -> None:
        cases.append(GradCheckCase(name, tolerance, run))

    def check(op, inputs: Sequence[Tensor], params=()) -> Callable[[], float]:
        return lambda: checked_gradient(op, inputs, params, seed)

    conv1 = ConvLayer(3, 4, 1, rng=rng)
    add("conv1x1", check(conv1, [_randn(rng, (2, 3, 5, 5))], conv1.parameters()))
    conv3 = ConvLayer(3, 4, 3, dilation=2, rng=rng)
    add("conv3x3_r2", check(conv3, [_randn(rng, (1, 3, 7, 7))], conv3.parameters()))

    norm = ChannelNorm(3)
    norm.gamma.data = rng.uniform(0.5, 1.5, norm.gamma.shape).astype(np.float32)
    norm.beta.data = rng.standard_normal(norm.beta.shape).astype(np.float32)
    add("channel_norm", check(norm, [_randn(rng, (2, 3, 4, 4))], norm.parameters()))

    add(
        "bilinear_upsample",
        check(lambda x: F.bilinear_upsample(x, 2), [_randn(rng, (1, 2, 3, 4))]),
    )
    add(
        "resize_bilinear",
        check(lambda x: F.resize_bilinear(x, (5, 7)), [_randn(rng, (1, 2, 4, 3))]),
    )
    add("avg_pool2", check(F.avg_pool2, [_randn(rng, (1, 2, 4, 6))]))
    add(
        "concat_channels",
        check(
            ops.concat_channels,
            [_randn(rng, (1, 2, 3, 3)), _randn(rng, (1, 3, 3, 3))],
        ),
    )
    pair = [_randn(rng, (1, 2, 3, 3)), _randn(rng, (1, 2, 3, 3))]
    add("add", check(ops.add, pair))
    add("sub", check(ops.sub, pair))
    add("mul", check(ops.mul, pair))
    add("relu", check(ops.relu, [_randn(rng, (1, 2, 4, 4))]))
    add("softmax_channels", check(ops.softmax_channels, [_randn(rng, (1, 4, 3, 3))]))

    labels = rng.integers(0, 4, size=(2, 3, 3))
    labels[0, 0, 0] = 255
    add(
        "softmax_cross_entropy",
        check(
            lambda x: F.softmax_cross_entropy(x, labels),
            [_randn(rng, (2, 4, 3, 3))],
        ),
    )

    block = McnBlock(3, 4, rate=2, rng=rng)
    add("mcn_block", check(block, [_randn(rng, (1, 3, 6, 6))], block.parameters()))
    stage = ShortSkipStage(3, 4, rate=2, rng=rng)
    add(
        "short_skip_stage",
        check(stage, [_randn(rng, (1, 3, 6, 6))], stage.parameters()),
    )
    refine = RefineStage(4, 3, 4, rng)
    add(
        "refinement_step",
        check(
            lambda c, s: refinement_step(c, s, refine),
            [_randn(rng, (1, 4, 3, 3)), _randn(rng, (1, 3, 6, 6))],
            refine.parameters(),
        ),
    )

    image = _image(rng, 4, 4)
    mpn = MpnParams(3, 2, iterations=1, pairwise=ExactFilter(), rng=rng)
    mpn_guide = mpn.pairwise.prepare(image)
    add(
        "mpn_iteration_exact",
        check(
            lambda s, s0: mpn_iteration(s, s0, mpn_guide, mpn),
            [_randn(rng, (1, 3, 4, 4)), _randn(rng, (1, 3, 4, 4))],
            mpn.parameters(),
        ),
    )
    crf = CrfRnnParams(3, iterations=1, pairwise=ExactFilter(), rng=rng)
    crf_guide = crf.pairwise.prepare(image)
    add(
        "crf_rnn_step_exact",
        check(
            lambda s, u: crf_rnn_step(s, u, crf_guide, crf),
            [_randn(rng, (1, 3, 4, 4)), _randn(rng, (1, 3, 4, 4))],
            crf.parameters(),
        ),
    )

    lattice = LatticeFilter().prepare(_image(rng, 5, 5))
    add(
        "lattice_filter",
        check(lattice, [_randn(rng, (1, 2, 5, 5))]),
        TOLERANCES.LATTICE_GRADIENT,
    )
    return cases


def run_suite(cases: Sequence[GradCheckCase] | None = None) -> list[GradCheckRow]:
    rows = []
    for case in cases if cases is not None else default_cases():
        error = case.run()
        row = GradCheckRow(case.name, error, case.tolerance)
        logger.debug(f"gradcheck {case.name}: {error:.3e} ({row.status})")
        rows.append(row)
    failed = [r.name for r in rows if not r.passed]
    if failed:
        logger.error(f"gradcheck failures: {', '.join(failed)}")
    else:
        logger.info(f"gradcheck: all {len(rows)} operations pass")
    return rows


def format_table(rows: Sequence[GradCheckRow]) -> str:
    """TSV with columns ``op error tolerance status``."""
    lines = ["op\terror\ttolerance\tstatus"]
    lines += [
        f"{r.name}\t{r.error:.3e}\t{r.tolerance:.0e}\t{r.status}" for r in rows
    ]
    return "\n".join(lines) + "\n"
