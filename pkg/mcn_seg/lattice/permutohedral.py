"""Permutohedral lattice Gaussian filtering (splat, blur, slice).

Points in ``d`` dimensions are lifted onto the ``d``-dimensional
permutohedral lattice (the zero-sum hyperplane of Z^(d+1) scaled by
``d+1``). Each point splats its value onto the ``d+1`` vertices of its
enclosing simplex with barycentric weights; values are blurred with the
``(1, 2, 1)/4`` kernel along each of the ``d+1`` lattice directions and
sliced back with the same weights. The composite operator approximates
``v'_i = sum_j exp(-|f_i - f_j|^2 / 2) v_j``.

The lattice is immutable once built and may be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from mcn_seg.config.constants import TOLERANCES
from mcn_seg.exceptions import LatticeError, ShapeMismatchError

_CODE_LIMIT = 2**62

# Points sampled to calibrate the unnormalized operator's scale.
GAIN_SAMPLES = 64


@dataclass(frozen=True)
class FeaturePoints:
    """``m`` points with ``d`` feature coordinates each."""

    coords: np.ndarray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise LatticeError(f"feature points must be (m, d), got {coords.shape}")
        bad = ~np.isfinite(coords).all(axis=1)
        if bad.any():
            raise LatticeError(
                f"non-finite feature coordinate at point {int(np.argmax(bad))}"
            )
        object.__setattr__(self, "coords", coords)

    @property
    def m(self) -> int:
        return self.coords.shape[0]

    @property
    def d(self) -> int:
        return self.coords.shape[1]


def _canonical_simplex(d: int) -> np.ndarray:
    canonical = np.empty((d + 1, d + 1), dtype=np.int64)
    for r in range(d + 1):
        canonical[r, : d + 1 - r] = r
        canonical[r, d + 1 - r :] = r - (d + 1)
    return canonical


def _elevate(coords: np.ndarray) -> np.ndarray:
    """Embed ``(m, d)`` features in the ``(m, d+1)`` zero-sum hyperplane."""
    m, d = coords.shape
    i = np.arange(d)
    inv_std = np.sqrt(2.0 / 3.0) * (d + 1)
    cf = coords * (inv_std / np.sqrt((i + 1.0) * (i + 2.0)))
    suffix = np.cumsum(cf[:, ::-1], axis=1)[:, ::-1]
    elevated = np.empty((m, d + 1))
    elevated[:, 0] = suffix[:, 0]
    elevated[:, 1:] = np.concatenate([suffix[:, 1:], np.zeros((m, 1))], axis=1) - (
        (i + 1) * cf
    )
    return elevated


def _simplex(elevated: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest remainder-0 point, rank permutation and barycentric weights."""
    m, d1 = elevated.shape
    d = d1 - 1
    rem0 = np.rint(elevated / d1) * d1
    total = np.rint(rem0.sum(axis=1) / d1).astype(np.int64)

    diff = elevated - rem0
    less = diff[:, :, None] < diff[:, None, :]
    upper = np.triu(np.ones((d1, d1), dtype=bool), 1)
    rank = (less & upper).sum(axis=2) + (
        ~less.transpose(0, 2, 1) & upper.T
    ).sum(axis=2)

    rank = rank + total[:, None]
    low = rank < 0
    high = rank > d
    rank[low] += d1
    rem0[low] += d1
    rank[high] -= d1
    rem0[high] -= d1

    delta = (elevated - rem0) / d1
    bary = np.zeros((m, d1 + 1))
    rows = np.arange(m)[:, None]
    bary[rows, d - rank] += delta
    bary[rows, d - rank + 1] -= delta
    bary[:, 0] += 1.0 + bary[:, d1]
    return rem0.astype(np.int64), rank, bary[:, :d1]


@dataclass(frozen=True)
class PermutohedralLattice:
    """Simplex memberships of every point plus vertex neighbourhoods.

    Attributes:
        d: feature dimension
        vertices: ``(V, d+1)`` integer lattice keys, each summing to zero
        indices: ``(m, d+1)`` vertex index of each simplex corner
        weights: ``(m, d+1)`` barycentric weights (nonnegative, sum 1)
        plus, minus: ``(d+1, V)`` neighbour vertex along each direction,
            ``V`` where the neighbour is not in the lattice
    """

    d: int
    vertices: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    plus: np.ndarray
    minus: np.ndarray
    coords: np.ndarray | None = field(default=None, repr=False)
    _ones_response: np.ndarray | None = field(default=None, repr=False)
    _gain: float | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.indices.shape[0]

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def alpha(self) -> float:
        return 1.0 / (1.0 + 2.0 ** (-self.d))

    def splat(self, values: np.ndarray) -> np.ndarray:
        """Accumulate ``(m, c)`` values onto vertices; adds a zero pad row."""
        num_v = self.num_vertices
        flat_idx = self.indices.reshape(-1)
        out = np.zeros((num_v + 1, values.shape[1]))
        for k in range(values.shape[1]):
            contrib = (self.weights * values[:, k : k + 1]).reshape(-1)
            out[:num_v, k] = np.bincount(flat_idx, weights=contrib, minlength=num_v)
        return out

    def blur(self, lattice_values: np.ndarray, reverse: bool = False) -> np.ndarray:
        """(1, 2, 1)/4 blur along every direction; ``reverse`` is the adjoint."""
        num_v = self.num_vertices
        values = lattice_values
        order = range(self.d, -1, -1) if reverse else range(self.d + 1)
        for j in order:
            blurred = np.empty_like(values)
            blurred[:num_v] = 0.5 * values[:num_v] + 0.25 * (
                values[self.plus[j]] + values[self.minus[j]]
            )
            blurred[num_v] = 0.0
            values = blurred
        return values

    def slice(self, lattice_values: np.ndarray) -> np.ndarray:
        gathered = lattice_values[self.indices]
        return self.alpha * np.einsum("mr,mrc->mc", self.weights, gathered)

    def apply(self, values: np.ndarray, transpose: bool = False) -> np.ndarray:
        """Unnormalized operator ``A v`` (or ``A^T v``)."""
        return self.slice(self.blur(self.splat(values), reverse=transpose))

    def ones_response(self) -> np.ndarray:
        """``A 1`` per point, the normalizer (cached)."""
        if self._ones_response is None:
            response = self.apply(np.ones((self.m, 1)))[:, 0]
            object.__setattr__(self, "_ones_response", response)
        return self._ones_response  # type: ignore[return-value]

    def gain(self) -> float:
        """Density correction taking ``A v`` to the Gaussian sum's scale.

        The ratio of exact to lattice all-ones responses, summed over an
        evenly spaced sample of at most ``GAIN_SAMPLES`` points; linear in
        ``m``. Without stored coordinates the raw operator is kept.
        """
        if self._gain is None:
            gain = 1.0
            if self.coords is not None:
                sample = np.unique(
                    np.linspace(0, self.m - 1, min(self.m, GAIN_SAMPLES)).astype(int)
                )
                exact = np.exp(
                    -0.5 * _pairwise_sqdist(self.coords[sample], self.coords)
                ).sum()
                approx = float(self.ones_response()[sample].sum())
                if approx > 0.0:
                    gain = float(exact) / approx
            object.__setattr__(self, "_gain", gain)
        return self._gain  # type: ignore[return-value]


def lattice_build(points: FeaturePoints | np.ndarray) -> PermutohedralLattice:
    """Assign every point to the vertices of its enclosing simplex.

    Raises:
        LatticeError: a non-finite coordinate (the message names the point)
    """
    if not isinstance(points, FeaturePoints):
        points = FeaturePoints(points)
    coords = points.coords
    m, d = coords.shape
    d1 = d + 1

    rem0, rank, weights = _simplex(_elevate(coords))
    canonical = _canonical_simplex(d)
    # keys[p, r] = rem0[p] + canonical[r, rank[p]]
    keys = rem0[:, None, :] + canonical[:, rank].transpose(1, 0, 2)
    vertices, inverse = np.unique(
        keys.reshape(m * d1, d1), axis=0, return_inverse=True
    )
    indices = np.asarray(inverse).reshape(m, d1)

    plus, minus = _neighbours(vertices)
    logger.debug(f"lattice built: m={m} d={d} vertices={len(vertices)}")
    return PermutohedralLattice(
        d, vertices, indices, weights, plus, minus, coords=coords
    )


def _neighbours(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    num_v, d1 = vertices.shape
    d = d1 - 1
    steps = np.ones((d1, d1), dtype=np.int64) - d1 * np.eye(d1, dtype=np.int64)
    # Only the first d coordinates are needed to identify a zero-sum key.
    lo = int(vertices.min()) - d1
    base = int(vertices.max()) + d1 - lo + 1
    if base**d < _CODE_LIMIT:
        powers = base ** np.arange(d, dtype=np.int64)

        def encode(keys: np.ndarray) -> np.ndarray:
            return ((keys[..., :d] - lo) * powers).sum(axis=-1)

        codes = encode(vertices)
        order = np.argsort(codes, kind="stable")
        sorted_codes = codes[order]

        def lookup(keys: np.ndarray) -> np.ndarray:
            wanted = encode(keys)
            pos = np.searchsorted(sorted_codes, wanted)
            pos_c = np.minimum(pos, num_v - 1)
            hit = sorted_codes[pos_c] == wanted
            return np.where(hit, order[pos_c], num_v)

    else:
        table = {tuple(v[:d]): i for i, v in enumerate(vertices.tolist())}

        def lookup(keys: np.ndarray) -> np.ndarray:
            return np.array(
                [table.get(tuple(k[:d]), num_v) for k in keys.tolist()],
                dtype=np.int64,
            )

    plus = np.stack([lookup(vertices + steps[j]) for j in range(d1)])
    minus = np.stack([lookup(vertices - steps[j]) for j in range(d1)])
    return plus, minus


def lattice_filter(
    lattice: PermutohedralLattice,
    values: np.ndarray,
    normalize: bool = False,
    transpose: bool = False,
) -> np.ndarray:
    """Gaussian-filter ``(m, c)`` values over the lattice's feature space.

    Without ``normalize`` the raw splat/blur/slice result is rescaled by
    :meth:`PermutohedralLattice.gain` to the magnitude of the exact sum.
    With ``normalize`` the result is divided by the filtered all-ones
    vector so constants are preserved. ``transpose`` applies the adjoint
    (blur directions reversed); for the normalized operator ``A v / n`` the
    adjoint is ``A^T (v / n)``.

    Raises:
        LatticeError: row count differs from the lattice's point count
    """
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[0] != lattice.m:
        raise LatticeError(
            f"values must be ({lattice.m}, c), got {values.shape}"
        )
    work = values.astype(np.float64, copy=False)
    if not normalize:
        out = lattice.gain() * lattice.apply(work, transpose)
    elif transpose:
        out = lattice.apply(work / lattice.ones_response()[:, None], transpose=True)
    else:
        out = lattice.apply(work) / lattice.ones_response()[:, None]
    return out.astype(values.dtype, copy=False)


def _pairwise_sqdist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gaussian_kernel_matrix(
    points: FeaturePoints | np.ndarray, block: int = 256
) -> np.ndarray:
    """Exact ``(m, m)`` matrix ``exp(-|f_i - f_j|^2 / 2)``."""
    if not isinstance(points, FeaturePoints):
        points = FeaturePoints(points)
    if points.m > TOLERANCES.ORACLE_MAX_POINTS:
        raise LatticeError(
            f"brute-force filter limited to {TOLERANCES.ORACLE_MAX_POINTS} "
            f"points, got {points.m}"
        )
    coords = points.coords
    kernel = np.empty((points.m, points.m))
    for start in range(0, points.m, block):
        stop = min(start + block, points.m)
        kernel[start:stop] = np.exp(-0.5 * _pairwise_sqdist(coords[start:stop], coords))
    return kernel


def gaussian_filter_bruteforce(
    points: FeaturePoints | np.ndarray,
    values: np.ndarray,
    normalize: bool = False,
) -> np.ndarray:
    """Exact O(m^2) Gaussian filtering, the reference for the lattice.

    Raises:
        LatticeError: more than the oracle gate of points, or row mismatch
    """
    if not isinstance(points, FeaturePoints):
        points = FeaturePoints(points)
    values = np.asarray(values)
    if values.ndim != 2 or values.shape[0] != points.m:
        raise LatticeError(f"values must be ({points.m}, c), got {values.shape}")
    kernel = gaussian_kernel_matrix(points)
    out = kernel @ values.astype(np.float64)
    if normalize:
        out /= kernel.sum(axis=1, keepdims=True)
    return out.astype(values.dtype, copy=False)


def relative_l2(approx: np.ndarray, exact: np.ndarray) -> float:
    """``|approx - exact| / |exact|`` in the Frobenius norm."""
    if approx.shape != exact.shape:
        raise ShapeMismatchError("relative_l2 operands", approx.shape, exact.shape)
    denom = float(np.linalg.norm(exact))
    return float(np.linalg.norm(approx - exact)) / max(denom, 1e-300)


def operator_matrix(
    lattice: PermutohedralLattice, normalize: bool = False
) -> np.ndarray:
    """Dense ``(m, m)`` matrix of the lattice operator (columns are A e_i)."""
    return lattice_filter(lattice, np.eye(lattice.m), normalize=normalize)


def operator_asymmetry(lattice: PermutohedralLattice) -> float:
    """``|A - A^T| / |A|`` of the unnormalized lattice operator."""
    a = operator_matrix(lattice)
    return float(np.linalg.norm(a - a.T) / max(np.linalg.norm(a), 1e-300))
