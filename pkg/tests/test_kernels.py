"""Tests for kernel families and Gram assembly."""

import math

import numpy as np
import pytest
from scipy.special import gamma, kv

from calibkit.core.kernels import KernelFamily, KernelSpec, eval_kernel, gram
from calibkit.errors import DegenerateDesignError, InputError


def matern_bessel(nu, phi, distance):
    """Matern correlation from the modified Bessel function of the second kind."""
    z = 2.0 * math.sqrt(nu) * phi * distance
    return 2.0 ** (1.0 - nu) / gamma(nu) * z ** nu * kv(nu, z)


class TestEval:
    """Point evaluations of the two families."""

    def test_gaussian_on_diagonal_is_one(self):
        assert eval_kernel(KernelSpec.gaussian(1.0), 0.3, 0.3) == 1.0

    def test_gaussian_unit_distance(self):
        assert eval_kernel(KernelSpec.gaussian(1.0), 0.0, 1.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_matern_half_closed_form(self):
        value = eval_kernel(KernelSpec.matern(0.5, 1.0), 0.0, 1.0)
        assert value == pytest.approx(math.exp(-math.sqrt(2.0)), rel=1e-14)
        assert value == pytest.approx(0.243117, abs=1e-6)

    @pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5])
    @pytest.mark.parametrize("distance", [0.05, 0.3, 1.0, 2.7])
    def test_matern_matches_bessel_oracle(self, nu, distance):
        spec = KernelSpec.matern(nu, 1.3)
        expected = matern_bessel(nu, 1.3, distance)
        assert eval_kernel(spec, [0.0], [distance]) == pytest.approx(expected, rel=1e-10)

    def test_values_in_unit_interval(self, rng):
        for spec in (KernelSpec.gaussian(2.0), KernelSpec.matern(1.5, 0.7)):
            for _ in range(50):
                s, t = rng.uniform(-3, 3, size=2), rng.uniform(-3, 3, size=2)
                assert 0.0 < eval_kernel(spec, s, t) <= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            eval_kernel(KernelSpec.gaussian(1.0), [0.0, 1.0], [0.0])

    def test_non_finite_coordinates(self):
        with pytest.raises(InputError):
            eval_kernel(KernelSpec.gaussian(1.0), [np.nan], [0.0])


class TestKernelProperties:
    """Symmetry and the scale-parameter identity."""

    def test_symmetry_is_exact(self, rng):
        specs = [KernelSpec.gaussian(1.7)] + [KernelSpec.matern(nu, 0.9) for nu in (0.5, 1.5, 2.5, 3.5)]
        for spec in specs:
            for _ in range(20):
                s, t = rng.normal(size=3), rng.normal(size=3)
                assert eval_kernel(spec, s, t) == eval_kernel(spec, t, s)

    @pytest.mark.parametrize("spec", [
        KernelSpec.gaussian(3.0),
        KernelSpec.matern(0.5, 2.0),
        KernelSpec.matern(2.5, 4.5),
    ])
    def test_scale_identity(self, spec, rng):
        unit = spec.with_phi(1.0)
        a = spec.scale_factor
        for _ in range(20):
            s, t = rng.uniform(-1, 1, size=2), rng.uniform(-1, 1, size=2)
            assert eval_kernel(spec, s, t) == pytest.approx(eval_kernel(unit, a * s, a * t), rel=1e-12)

    def test_gaussian_scale_factor_is_square_root(self):
        assert KernelSpec.gaussian(4.0).scale_factor == 2.0
        assert KernelSpec.matern(1.5, 4.0).scale_factor == 4.0


class TestGram:
    """Gram matrices of designs."""

    def test_single_point(self, gaussian):
        np.testing.assert_array_equal(gram(gaussian, np.array([[0.4]])), [[1.0]])

    def test_two_points(self, gaussian):
        expected = np.array([[1.0, math.exp(-1.0)], [math.exp(-1.0), 1.0]])
        np.testing.assert_allclose(gram(gaussian, np.array([[0.0], [1.0]])), expected, rtol=1e-15)

    def test_eleven_point_conditioning(self, gaussian, eleven_points):
        eigenvalues = np.linalg.eigvalsh(gram(gaussian, eleven_points))
        assert 0.0 < eigenvalues[0] < 1e-8

    def test_symmetric_unit_diagonal(self, rng):
        points = rng.uniform(0, 1, size=(7, 2))
        matrix = gram(KernelSpec.matern(1.5, 2.0), points)
        np.testing.assert_array_equal(matrix, matrix.T)
        np.testing.assert_array_equal(np.diag(matrix), np.ones(7))

    def test_positive_definite_on_separated_designs(self, rng):
        for n in range(2, 9):
            points = np.sort(rng.choice(np.linspace(0, 4, 9), size=n, replace=False)).reshape(-1, 1)
            for spec in (KernelSpec.gaussian(1.0), KernelSpec.matern(2.5, 1.0)):
                assert np.linalg.eigvalsh(gram(spec, points))[0] > 0

    def test_duplicate_points(self, gaussian):
        with pytest.raises(DegenerateDesignError):
            gram(gaussian, np.array([[0.1], [0.5], [0.1]]))


class TestKernelSpec:
    """Validation and serialization."""

    @pytest.mark.parametrize("kwargs", [
        {"family": "gaussian", "phi": 0.0},
        {"family": "gaussian", "phi": -1.0},
        {"family": "matern", "phi": 1.0, "nu": 2.0},
        {"family": "matern", "phi": 1.0},
        {"family": "gaussian", "phi": 1.0, "nu": 1.5},
        {"family": "cauchy", "phi": 1.0},
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(InputError):
            KernelSpec(**kwargs)

    def test_family_from_string(self):
        assert KernelSpec("MATERN", 1.0, 2.5).family is KernelFamily.MATERN

    def test_dict_round_trip(self):
        spec = KernelSpec.matern(3.5, 0.25)
        assert KernelSpec.from_dict(spec.to_dict()) == spec
        assert spec.to_dict() == {"family": "matern", "phi": 0.25, "nu": 3.5}
