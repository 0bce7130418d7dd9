"""Message passing network and the merged CRF-RNN baseline.

One MPN step compresses the score map from ``N`` to ``Ns`` channels,
filters the compressed map over the image's bilateral feature space and
expands ``concat(R, filtered)`` back to ``N`` channels as a residual on the
initial score map ``S0``:

    R = reduce(S_i); F = filter(R); S_{i+1} = S0 + expand(concat(R, F))

The same parameters are used at every iteration and the filter (the
expensive lattice) is built once per image batch.

The CRF-RNN baseline runs mean-field with the weighting and compatibility
steps merged into one 1×1 conv:

    Q = softmax(S_i); M = filter(Q); S_{i+1} = U - merged(M)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mcn_seg.autodiff import ops
from mcn_seg.autodiff.tensor import Tensor
from mcn_seg.config.constants import DESK, PAPER
from mcn_seg.exceptions import ConfigError, ShapeMismatchError
from mcn_seg.lattice.filters import BoundFilter, LatticeFilter, PairwiseFilter
from mcn_seg.nn.layers import ConvLayer, Module

BYTES_PER_VALUE = 4


def default_filter() -> PairwiseFilter:
    return LatticeFilter(DESK.THETA_ALPHA, DESK.THETA_BETA, normalize=True)


class MpnParams(Module):
    """Shared reduce/expand convolutions, iteration count and filter."""

    def __init__(
        self,
        num_classes: int,
        reduced: int = DESK.MPN_REDUCED,
        iterations: int = PAPER.MPN_ITERATIONS,
        pairwise: PairwiseFilter | None = None,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        if not 1 <= reduced < num_classes:
            raise ConfigError(
                f"MPN needs 1 <= Ns < N, got Ns={reduced} N={num_classes}"
            )
        if iterations < 0:
            raise ConfigError(f"MPN iterations must be >= 0, got {iterations}")
        rng = rng or np.random.default_rng(0)
        self.reduce = ConvLayer(num_classes, reduced, 1, rng=rng)
        self.expand = ConvLayer(2 * reduced, num_classes, 3, rng=rng)
        # Small expand weights keep the residual close to S0 at init.
        self.expand.weight.data *= 0.1
        self.iterations = iterations
        self.pairwise = pairwise or default_filter()

    @property
    def num_classes(self) -> int:
        return self.reduce.c_in

    @property
    def reduced(self) -> int:
        return self.reduce.c_out


class CrfRnnParams(Module):
    """Merged weighting + compatibility 1×1 conv, iterations and filter."""

    def __init__(
        self,
        num_classes: int,
        iterations: int = PAPER.MPN_ITERATIONS,
        pairwise: PairwiseFilter | None = None,
        rng: np.random.Generator | None = None,
    ):
        super().__init__()
        if iterations < 0:
            raise ConfigError(f"CRF-RNN iterations must be >= 0, got {iterations}")
        self.merged = ConvLayer(num_classes, num_classes, 1, rng=rng)
        self.iterations = iterations
        self.pairwise = pairwise or default_filter()

    @property
    def num_classes(self) -> int:
        return self.merged.c_in


def _bind(guide: Tensor | BoundFilter, pairwise: PairwiseFilter) -> BoundFilter:
    return guide if isinstance(guide, BoundFilter) else pairwise.prepare(guide)


def _check_scores(
    s_i: Tensor, s_0: Tensor, num_classes: int, guide: Tensor | BoundFilter
) -> None:
    if s_i.channels != num_classes:
        raise ShapeMismatchError(
            f"score map must have N={num_classes} channels", s_i.shape
        )
    if s_i.shape != s_0.shape:
        raise ShapeMismatchError("S_i and S_0 must agree", s_i.shape, s_0.shape)
    if tuple(guide.spatial) != s_i.spatial:
        raise ShapeMismatchError(
            "score map and guiding image resolutions differ",
            s_i.shape,
            tuple(guide.spatial),
        )


def mpn_iteration(
    s_i: Tensor, s_0: Tensor, guide: Tensor | BoundFilter, params: MpnParams
) -> Tensor:
    """One residual message-passing step.

    ``guide`` is the ``(n, 3, h, w)`` image or a filter already prepared
    for it.
    """
    _check_scores(s_i, s_0, params.num_classes, guide)
    bound = _bind(guide, params.pairwise)
    reduced = params.reduce(s_i)
    filtered = bound(reduced)
    return ops.add(s_0, params.expand(ops.concat_channels(reduced, filtered)))


def mpn_trajectory(
    s_0: Tensor, image: Tensor | BoundFilter, params: MpnParams
) -> list[Tensor]:
    """``[S_0, S_1, ..., S_T]``; the lattice is built once."""
    states = [s_0]
    if params.iterations == 0:
        return states
    bound = _bind(image, params.pairwise)
    for _ in range(params.iterations):
        states.append(mpn_iteration(states[-1], s_0, bound, params))
    return states


def mpn_run(s_0: Tensor, image: Tensor | BoundFilter, params: MpnParams) -> Tensor:
    """Apply ``params.iterations`` shared steps; ``T = 0`` returns ``s_0``."""
    return mpn_trajectory(s_0, image, params)[-1]


def crf_rnn_step(
    s_i: Tensor, unary: Tensor, guide: Tensor | BoundFilter, params: CrfRnnParams
) -> Tensor:
    """One mean-field step with merged weighting/compatibility."""
    _check_scores(s_i, unary, params.num_classes, guide)
    bound = _bind(guide, params.pairwise)
    messages = bound(ops.softmax_channels(s_i))
    return ops.sub(unary, params.merged(messages))


def crf_rnn_run(
    unary: Tensor, image: Tensor | BoundFilter, params: CrfRnnParams
) -> Tensor:
    s = unary
    if params.iterations == 0:
        return s
    bound = _bind(image, params.pairwise)
    for _ in range(params.iterations):
        s = crf_rnn_step(s, unary, bound, params)
    return s


def hand_mpn_params(
    num_classes: int,
    gain: float = 2.0,
    iterations: int = PAPER.MPN_ITERATIONS,
    pairwise: PairwiseFilter | None = None,
) -> MpnParams:
    """Hand-set MPN that smooths class-score differences.

    With ``Ns = N - 1``, reduced channel ``k`` is ``S_k - S_last``; the
    expansion adds ``gain`` times the filtered difference back onto class
    ``k`` (centre tap only) and leaves the reduced path and the last class
    untouched. Each step therefore computes
    ``D_{i+1} = D_0 + gain * filter(D_i)`` on the score differences.
    """
    n = num_classes
    params = MpnParams(n, n - 1, iterations, pairwise)
    reduce = np.zeros(params.reduce.weight.shape, dtype=np.float32)
    for k in range(n - 1):
        reduce[k, k, 0, 0] = 1.0
        reduce[k, n - 1, 0, 0] = -1.0
    params.reduce.weight.data = reduce
    params.reduce.bias.data = np.zeros_like(params.reduce.bias.data)

    expand = np.zeros(params.expand.weight.shape, dtype=np.float32)
    for k in range(n - 1):
        expand[k, (n - 1) + k, 1, 1] = gain
    params.expand.weight.data = expand
    params.expand.bias.data = np.zeros_like(params.expand.bias.data)
    return params


@dataclass(frozen=True)
class MemoryEstimate:
    """Activation memory of one forward pass, term by term (bytes)."""

    variant: str
    filtered_channels: int
    terms: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.terms.values())

    def __getitem__(self, term: str) -> int:
        return self.terms.get(term, 0)


def memory_estimate(
    num_classes: int,
    reduced: int,
    height: int,
    width: int,
    iterations: int,
    variant: str = "mpn",
    feature_dim: int = 5,
) -> MemoryEstimate:
    """Float32 activation bytes kept for backward by MPN or CRF-RNN.

    Per iteration MPN stores the reduced map, the filtered map (``Ns``
    channels each), their concat and the expanded and residual maps (``N``
    channels); CRF-RNN stores softmax, filtered, merged and residual maps,
    all ``N`` channels. Both share one lattice (``d+1`` vertex indices and
    weights per pixel).
    """
    if min(num_classes, reduced, height, width) < 1 or iterations < 0:
        raise ConfigError("memory_estimate needs positive sizes")
    area = height * width * BYTES_PER_VALUE
    t = iterations
    lattice = 2 * (feature_dim + 1) * area
    if variant == "mpn":
        terms = {
            "reduced": reduced * area * t,
            "filtered": reduced * area * t,
            "concat": 2 * reduced * area * t,
            "expanded": num_classes * area * t,
            "residual": num_classes * area * t,
            "lattice": lattice,
        }
        return MemoryEstimate("mpn", reduced, terms)
    if variant in ("crf_rnn", "crf-rnn", "crf"):
        terms = {
            "softmax": num_classes * area * t,
            "filtered": num_classes * area * t,
            "merged": num_classes * area * t,
            "residual": num_classes * area * t,
            "lattice": lattice,
        }
        return MemoryEstimate("crf_rnn", num_classes, terms)
    raise ConfigError(f"unknown memory_estimate variant {variant!r}")
