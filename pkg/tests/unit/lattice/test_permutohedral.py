"""Tests for lattice construction and filtering."""

import dataclasses

import numpy as np
import pytest

from mcn_seg.exceptions import LatticeError
from mcn_seg.lattice.permutohedral import (
    FeaturePoints,
    gaussian_filter_bruteforce,
    lattice_build,
    lattice_filter,
    operator_asymmetry,
    relative_l2,
)
from mcn_seg.validation.filter_benchmark import run_filter_benchmark


class TestLatticeBuild:
    """Test suite for lattice_build."""

    @pytest.mark.parametrize("d", [1, 2, 5])
    def test_single_point_simplex(self, rng, d):
        """One point touches d+1 distinct vertices with convex weights."""
        lattice = lattice_build(rng.uniform(-3, 3, size=(1, d)))
        assert lattice.num_vertices == d + 1
        assert lattice.indices.shape == (1, d + 1)
        assert lattice.weights.sum() == pytest.approx(1.0)
        assert np.all(lattice.weights >= -1e-12)

    def test_vertex_keys_sum_to_zero(self, rng):
        """Every key lies in the zero-sum hyperplane."""
        lattice = lattice_build(rng.uniform(0, 4, size=(50, 3)))
        assert not lattice.vertices.sum(axis=1).any()

    def test_rebuild_is_identical(self, rng):
        """Building twice from the same points gives the same lattice."""
        coords = rng.uniform(0, 2, size=(100, 5))
        a, b = lattice_build(coords), lattice_build(coords)
        np.testing.assert_array_equal(a.vertices, b.vertices)
        np.testing.assert_array_equal(a.indices, b.indices)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_non_finite_point_named(self):
        """The offending point index is reported."""
        coords = np.zeros((4, 2))
        coords[2, 1] = np.nan
        with pytest.raises(LatticeError, match="point 2"):
            lattice_build(coords)

    def test_bad_rank(self):
        """Feature points are a 2-D array."""
        with pytest.raises(LatticeError):
            FeaturePoints(np.zeros(5))


class TestLatticeFilter:
    """Test suite for lattice_filter."""

    def test_coincident_points_average(self, rng):
        """All points at one location: normalized output is the row mean."""
        lattice = lattice_build(np.full((6, 3), 0.7))
        values = rng.standard_normal((6, 2))
        out = lattice_filter(lattice, values, normalize=True)
        np.testing.assert_allclose(out, np.tile(values.mean(axis=0), (6, 1)))

    def test_constant_preserved(self, rng):
        """Normalized filtering keeps constants."""
        lattice = lattice_build(rng.uniform(0, 3, size=(80, 4)))
        out = lattice_filter(lattice, np.full((80, 1), 2.5), normalize=True)
        np.testing.assert_allclose(out, 2.5, atol=1e-4)

    def test_isolated_points_keep_values(self):
        """Points far apart only see themselves."""
        coords = np.array([[0.0, 0.0], [100.0, 100.0], [200.0, 0.0]])
        values = np.array([[1.0], [-2.0], [5.0]])
        out = lattice_filter(lattice_build(coords), values, normalize=True)
        np.testing.assert_allclose(out, values, atol=1e-9)

    def test_transpose_is_adjoint(self, rng):
        """<A x, y> = <x, A^T y> for the unnormalized and normalized operator."""
        lattice = lattice_build(rng.uniform(0, 2, size=(40, 3)))
        x = rng.standard_normal((40, 2))
        y = rng.standard_normal((40, 2))
        for normalize in (False, True):
            ax = lattice_filter(lattice, x, normalize=normalize)
            aty = lattice_filter(lattice, y, normalize=normalize, transpose=True)
            assert np.sum(ax * y) == pytest.approx(np.sum(x * aty), rel=1e-10)

    def test_close_to_exact_gaussian(self):
        """m=400 unit-cube points in 5-D stay within 10% of the oracle."""
        rng = np.random.default_rng(0)
        points = FeaturePoints(rng.uniform(0, 1, size=(400, 5)))
        values = rng.uniform(0, 1, size=(400, 3))
        approx = lattice_filter(lattice_build(points), values, normalize=True)
        exact = gaussian_filter_bruteforce(points, values, normalize=True)
        assert relative_l2(approx, exact) < 0.1

    @pytest.mark.parametrize("m", [100, 400, 1000])
    def test_normalized_accuracy_across_sizes(self, m):
        """Unit-scale 5-D features stay within 10% of the oracle."""
        rng = np.random.default_rng(0)
        points = FeaturePoints(rng.uniform(0, 1, size=(m, 5)))
        values = rng.uniform(0, 1, size=(m, 3))
        approx = lattice_filter(lattice_build(points), values, normalize=True)
        exact = gaussian_filter_bruteforce(points, values, normalize=True)
        assert relative_l2(approx, exact) < 0.1

    def test_unnormalized_close_to_exact_gaussian(self):
        """The raw Gaussian sum matches the oracle's magnitude, not just its shape."""
        rng = np.random.default_rng(0)
        points = FeaturePoints(rng.uniform(0, 1, size=(400, 5)))
        values = rng.uniform(0, 1, size=(400, 3))
        approx = lattice_filter(lattice_build(points), values)
        exact = gaussian_filter_bruteforce(points, values)
        assert relative_l2(approx, exact) < 0.1

    def test_gain_matches_total_mass_on_small_sets(self, rng):
        """Below the calibration sample size every point is used."""
        points = FeaturePoints(rng.uniform(0, 1, size=(30, 3)))
        ones = np.ones((30, 1))
        approx = lattice_filter(lattice_build(points), ones)
        exact = gaussian_filter_bruteforce(points, ones)
        assert approx.sum() == pytest.approx(exact.sum(), rel=1e-9)

    def test_gain_without_coordinates_is_one(self, rng):
        """A lattice rebuilt without coordinates keeps the raw operator."""
        lattice = lattice_build(rng.uniform(0, 1, size=(10, 2)))
        bare = dataclasses.replace(lattice, coords=None)
        assert bare.gain() == 1.0

    @pytest.mark.parametrize("normalize", [False, True])
    def test_linear_in_values(self, rng, normalize):
        """filter(a*v + w) = a*filter(v) + filter(w)."""
        lattice = lattice_build(rng.uniform(0, 1, size=(200, 5)))
        v = rng.standard_normal((200, 3))
        w = rng.standard_normal((200, 3))
        a = -1.7
        lhs = lattice_filter(lattice, a * v + w, normalize=normalize)
        rhs = a * lattice_filter(lattice, v, normalize=normalize) + lattice_filter(
            lattice, w, normalize=normalize
        )
        np.testing.assert_allclose(lhs, rhs, rtol=1e-4, atol=1e-10 * np.abs(rhs).max())

    def test_error_shrinks_with_feature_scale(self):
        """Smoother kernels relative to point spread are approximated better."""
        errors = [
            run_filter_benchmark(400, 5, seed=0, scale=s).rel_l2
            for s in (1.0, 0.3, 0.1)
        ]
        assert errors[0] > errors[1] > errors[2]

    def test_asymmetry_is_finite(self, rng):
        """The operator's asymmetry is measurable and bounded."""
        asym = operator_asymmetry(lattice_build(rng.uniform(0, 1, size=(30, 2))))
        assert 0.0 <= asym < 1.0

    def test_row_count_mismatch(self, rng):
        """Values must have one row per point."""
        lattice = lattice_build(rng.uniform(0, 1, size=(5, 2)))
        with pytest.raises(LatticeError):
            lattice_filter(lattice, np.zeros((4, 1)))

    def test_dtype_preserved(self, rng):
        """Output dtype follows the input values."""
        lattice = lattice_build(rng.uniform(0, 1, size=(5, 2)))
        out = lattice_filter(lattice, np.ones((5, 2), dtype=np.float32))
        assert out.dtype == np.float32


class TestBruteForce:
    """Test suite for the exact Gaussian oracle."""

    def test_single_point(self):
        """One point: the kernel is exp(0) = 1."""
        out = gaussian_filter_bruteforce(np.array([[0.3, -1.0]]), np.array([[4.0]]))
        np.testing.assert_allclose(out, [[4.0]])

    def test_two_points_by_hand(self):
        """Unit distance gives cross weight exp(-1/2)."""
        coords = np.array([[0.0], [1.0]])
        out = gaussian_filter_bruteforce(coords, np.array([[1.0], [0.0]]))
        np.testing.assert_allclose(out, [[1.0], [np.exp(-0.5)]])

    def test_point_gate(self):
        """Oracle is limited in size."""
        with pytest.raises(LatticeError):
            gaussian_filter_bruteforce(np.zeros((5001, 1)), np.zeros((5001, 1)))

    def test_relative_l2(self):
        """Zero for identical arrays."""
        a = np.arange(6.0).reshape(3, 2)
        assert relative_l2(a, a) == 0.0
