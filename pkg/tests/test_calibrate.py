"""Tests for calibration problems and estimators."""

import math

import numpy as np
import pytest

from calibkit import settings
from calibkit.calibration.estimators import (
    applicable_methods,
    calibrate,
    ko_calibrate,
    ko_profile_calibrate,
    l2_calibrate,
    l2_projection,
    l2_projection_result,
    modified_ko_calibrate,
    ols_calibrate,
)
from calibkit.calibration.problem import CalibrationMethod, CalibrationProblem, CheapSimulator, ExpensiveSimulator
from calibkit.core.design import BoxDomain, Design, equispaced
from calibkit.core.interpolate import factor_gram, log_det_from_factor
from calibkit.core.kernels import KernelSpec
from calibkit.core.numerics import CandidateSet
from calibkit.errors import EvaluationError, InputError
from calibkit.experiments import synthetic


def constant_simulator(points, theta):
    return np.full(points.shape[0], theta[0])


def square_physical(points):
    return points[:, 0] ** 2


@pytest.fixture
def constant_fit_problem(unit_interval):
    """y^p = x**2 observed at {0, 1} against the constant model y^s = theta"""
    design = Design([0.0, 1.0], unit_interval)
    return CalibrationProblem(
        domain=unit_interval,
        theta_region=BoxDomain.interval(0.0, 1.0),
        physical_design=design,
        physical_values=square_physical(design.points),
        simulator=CheapSimulator(constant_simulator, "constant"),
        physical_evaluator=square_physical,
        name="constant-fit",
    )


@pytest.fixture
def exact_match_problem(interval, gaussian):
    """y^p = 2 Phi(x, 0) against theta Phi(x, 0) over the candidates 1, 2, 3"""

    def bump(points):
        return np.exp(-points[:, 0] ** 2)

    def physical(points):
        return 2.0 * bump(points)

    design = equispaced(interval, 7)
    return CalibrationProblem(
        domain=interval,
        theta_region=CandidateSet([[1.0], [2.0], [3.0]]),
        physical_design=design,
        physical_values=physical(design.points),
        simulator=CheapSimulator(lambda points, theta: theta[0] * bump(points), "scaled-bump"),
        physical_evaluator=physical,
        name="exact-match",
    )


class TestProblem:
    """Problem validation and residuals."""

    def test_residuals(self, constant_fit_problem):
        np.testing.assert_allclose(constant_fit_problem.residuals([0.25]), [-0.25, 0.75])

    def test_value_count(self, unit_interval):
        with pytest.raises(InputError):
            CalibrationProblem(unit_interval, BoxDomain.interval(0, 1), Design([0.0, 1.0], unit_interval),
                               [1.0], CheapSimulator(constant_simulator))

    def test_non_finite_simulator_output(self, constant_fit_problem):
        broken = CalibrationProblem(
            constant_fit_problem.domain, constant_fit_problem.theta_region,
            constant_fit_problem.physical_design, constant_fit_problem.physical_values,
            CheapSimulator(lambda points, theta: np.full(points.shape[0], np.nan)),
        )
        with pytest.raises(EvaluationError):
            broken.residuals([0.5])

    def test_theta_dimension(self, constant_fit_problem):
        with pytest.raises(InputError):
            constant_fit_problem.residuals([0.1, 0.2])

    def test_locate(self, example1_problem):
        assert example1_problem.locate([2.0]) == (1, "2")
        assert example1_problem.locate([2.5]) == (None, None)


class TestKO:
    """Fixed-scale KO calibration."""

    def test_linear_exact_match(self, gaussian):
        result = ko_calibrate(synthetic.linear_problem(11), gaussian)
        assert result.theta_hat[0] == pytest.approx(1.0, abs=1e-5)
        assert result.method is CalibrationMethod.KO
        assert result.diagnostics["nugget_used"] == 0.0

    def test_example_selects_smooth_candidate(self, example1_problem, gaussian):
        result = ko_calibrate(example1_problem, gaussian)
        assert result.candidate_label == "1"
        assert result.objective_value == pytest.approx(16.0587, rel=1e-3)
        assert [entry["candidate"] for entry in result.diagnostics["trace"]] == ["1", "2", "3"]

    def test_exact_match_candidate(self, exact_match_problem, gaussian):
        result = ko_calibrate(exact_match_problem, gaussian)
        assert result.candidate_label == "2"
        assert result.objective_value == 0.0

    def test_design_order_does_not_matter(self, example1_problem, gaussian):
        order = np.random.default_rng(7).permutation(example1_problem.size)
        design = Design(example1_problem.physical_design.points[order], example1_problem.domain)
        shuffled = example1_problem.with_physical_data(design, example1_problem.physical_values[order])
        base = ko_calibrate(example1_problem, gaussian)
        permuted = ko_calibrate(shuffled, gaussian)
        assert permuted.candidate_label == base.candidate_label
        assert permuted.objective_value == pytest.approx(base.objective_value, rel=1e-5)

    def test_candidate_order_does_not_matter(self, example1_problem, gaussian):
        region = example1_problem.theta_region
        order = [2, 0, 1]
        reordered = CalibrationProblem(
            example1_problem.domain,
            CandidateSet(region.points[order], tuple(region.labels[i] for i in order)),
            example1_problem.physical_design,
            example1_problem.physical_values,
            example1_problem.simulator,
            example1_problem.physical_evaluator,
            "reordered",
        )
        for method in ("ko", "l2", "ols"):
            base = calibrate(example1_problem, method, gaussian)
            permuted = calibrate(reordered, method, gaussian)
            assert permuted.candidate_label == base.candidate_label, method
            np.testing.assert_array_equal(permuted.theta_hat, base.theta_hat)
            assert permuted.objective_value == pytest.approx(base.objective_value, rel=1e-12)
            assert reordered.theta_region.labels[permuted.candidate_index] == base.candidate_label

    def test_needs_two_observations(self, unit_interval, gaussian):
        problem = CalibrationProblem(unit_interval, BoxDomain.interval(0, 1), Design([0.5], unit_interval),
                                     [0.0], CheapSimulator(constant_simulator))
        with pytest.raises(InputError):
            ko_calibrate(problem, gaussian)


class TestProfileKO:
    """Joint maximization over theta and the kernel scale."""

    def test_matches_per_phi_search(self):
        problem = synthetic.exp_taylor_problem(6)
        kernel = KernelSpec.matern(2.5, 1.0)
        grid = [0.5, 1.0, 2.0]
        result, phi_hat = ko_profile_calibrate(problem, kernel, grid)
        best = -np.inf
        for phi in grid:
            scaled = kernel.with_phi(phi)
            pss_value = ko_calibrate(problem, scaled).objective_value
            factor, _ = factor_gram(problem.physical_design, scaled)
            best = max(best, -0.5 * problem.size * math.log(pss_value) - 0.5 * log_det_from_factor(factor))
        assert phi_hat in grid
        assert result.objective_value == pytest.approx(best, rel=1e-8)
        assert result.diagnostics["phi_hat"] == phi_hat

    def test_exact_match_is_unbounded(self, exact_match_problem, gaussian):
        result, phi_hat = ko_profile_calibrate(exact_match_problem, gaussian, [1.0, 2.0, 3.0])
        assert result.candidate_label == "2"
        assert result.objective_value == np.inf
        assert phi_hat == 1.0
        assert result.to_dict()["objective_value"] == np.inf


class TestModifiedKO:
    """Scale schedule tied to the fill distance."""

    def test_phi_from_fill_distance(self, example1_problem, gaussian):
        result = modified_ko_calibrate(example1_problem, gaussian)
        assert result.method is CalibrationMethod.MODIFIED_KO
        assert result.diagnostics["fill_distance"] == pytest.approx(0.1, abs=1e-12)
        assert result.diagnostics["phi"] == pytest.approx(math.sqrt(10.0), rel=1e-9)

    def test_constant_schedule_is_plain_ko(self, example1_problem):
        kernel = KernelSpec.gaussian(2.0)
        modified = modified_ko_calibrate(example1_problem, kernel, settings.Schedule(c=2.0, gamma=0.0))
        plain = ko_calibrate(example1_problem, kernel)
        assert modified.candidate_label == plain.candidate_label
        assert modified.objective_value == pytest.approx(plain.objective_value, rel=1e-12)

    def test_exact_match_candidate(self, exact_match_problem, gaussian):
        result = modified_ko_calibrate(exact_match_problem, gaussian)
        assert result.candidate_label == "2"
        assert result.objective_value == 0.0

    def test_schedule_validation(self):
        with pytest.raises(InputError):
            settings.Schedule(c=1.0, gamma=1.0)
        with pytest.raises(InputError):
            settings.Schedule(c=0.0)


class TestLeastSquares:
    """L2 distance, OLS and the L2 projection."""

    def test_ols_averages_the_design(self, constant_fit_problem):
        result = ols_calibrate(constant_fit_problem)
        assert result.theta_hat[0] == pytest.approx(0.5, abs=1e-5)
        assert result.objective_value == pytest.approx(0.5, abs=1e-8)

    def test_ols_exact_match(self, exact_match_problem):
        result = ols_calibrate(exact_match_problem)
        assert result.candidate_label == "2"
        assert result.theta_hat[0] == 2.0
        assert result.objective_value == 0.0

    def test_projection_is_the_mean(self, constant_fit_problem):
        assert l2_projection(constant_fit_problem)[0] == pytest.approx(1.0 / 3.0, abs=1e-5)

    def test_projection_of_exp_taylor(self):
        theta = l2_projection(synthetic.exp_taylor_problem(5), quad=128)
        assert theta[0] == pytest.approx(9.0 / 8.0, abs=1e-5)

    def test_l2_with_dense_design(self, unit_interval):
        design = equispaced(unit_interval, 9)
        problem = CalibrationProblem(unit_interval, BoxDomain.interval(0, 1), design, square_physical(design.points),
                                     CheapSimulator(constant_simulator), square_physical)
        result = l2_calibrate(problem, KernelSpec.matern(2.5, 1.0))
        assert result.theta_hat[0] == pytest.approx(1.0 / 3.0, abs=1e-3)
        assert result.diagnostics["quad_order"] == 64

    def test_example_selects_sine(self, example1_problem, gaussian):
        assert l2_calibrate(example1_problem, gaussian).candidate_label == "3"
        assert l2_projection_result(example1_problem).candidate_label == "3"

    def test_exact_match_distance(self, exact_match_problem, gaussian):
        result = l2_calibrate(exact_match_problem, gaussian)
        assert result.candidate_label == "2"
        assert result.objective_value == pytest.approx(0.0, abs=1e-8)


class TestExpensiveSimulator:
    """Calibration against a tabulated simulator."""

    def test_surrogate_reproduces_simulator(self):
        problem = synthetic.bump_problem(expensive=True)
        points = np.linspace(0, 1, 13).reshape(-1, 1)
        for theta in (1.0, 1.3, 1.9):
            np.testing.assert_allclose(problem.simulate(points, [theta]),
                                       synthetic.bump_simulator(points, [theta]), atol=1e-8)

    def test_cheap_and_expensive_agree(self):
        kernel = KernelSpec.gaussian(synthetic.BUMP_SCALE)
        cheap = l2_calibrate(synthetic.bump_problem(), kernel, quad=64)
        expensive = l2_calibrate(synthetic.bump_problem(expensive=True), kernel, quad=64)
        theta_star = 1.0 + math.sqrt(math.log(2.0) / synthetic.BUMP_SCALE)
        assert cheap.theta_hat[0] == pytest.approx(theta_star, abs=1e-5)
        assert expensive.theta_hat[0] == pytest.approx(cheap.theta_hat[0], abs=1e-6)
        assert "simulator_fill_distance" in expensive.diagnostics

    def test_saved_surrogate_is_reused(self):
        simulator = synthetic.bump_problem(expensive=True).simulator
        reused = ExpensiveSimulator.from_interpolator(simulator.surrogate, "saved")
        assert reused.surrogate is simulator.surrogate
        assert reused.nugget == settings.NuggetPolicy.pinned(simulator.surrogate.nugget_used)
        points = np.linspace(0, 1, 7).reshape(-1, 1)
        np.testing.assert_array_equal(reused.evaluate(points, [1.3]), simulator.evaluate(points, [1.3]))

    def test_agreement_needs_a_dense_grid(self):
        points = np.linspace(0, 1, 41).reshape(-1, 1)
        errors = {}
        for grid in (3, 5, 9):
            problem = synthetic.decay_problem(expensive=True, grid=grid)
            errors[grid] = max(
                np.max(np.abs(problem.simulate(points, [theta]) - synthetic.decay_simulator(points, [theta])))
                for theta in (1.0, 1.25, 1.5, 1.8, 2.0)
            )
        # the coarse grid misses the decay between nodes
        assert errors[3] > 1e-2
        assert errors[3] > 10 * errors[5]
        assert errors[9] < 1e-3

        kernel = synthetic.get_synthetic("decay").kernel
        cheap = l2_calibrate(synthetic.decay_problem(), kernel)
        dense = l2_calibrate(synthetic.decay_problem(expensive=True, grid=9), kernel)
        assert cheap.theta_hat[0] == pytest.approx(synthetic.DECAY_RATE, abs=1e-2)
        assert dense.theta_hat[0] == pytest.approx(cheap.theta_hat[0], abs=1e-3)

    def test_ko_family_needs_cheap_simulator(self):
        problem = synthetic.bump_problem(expensive=True)
        with pytest.raises(InputError):
            ko_calibrate(problem, KernelSpec.gaussian(20.0))
        assert applicable_methods(problem) == ["l2", "ols", "l2_projection"]


class TestDispatch:
    """calibrate() by method name."""

    def test_by_name(self, constant_fit_problem):
        result = calibrate(constant_fit_problem, "ols")
        assert result.method is CalibrationMethod.OLS

    def test_unknown_method(self, constant_fit_problem):
        with pytest.raises(InputError):
            calibrate(constant_fit_problem, "bayes")

    def test_kernel_required(self, constant_fit_problem):
        with pytest.raises(InputError):
            calibrate(constant_fit_problem, CalibrationMethod.KO)

    def test_result_record(self, example1_problem, gaussian):
        record = calibrate(example1_problem, "ko", gaussian).to_dict()
        assert record["method"] == "ko"
        assert record["candidate"] == "1"
        assert record["theta_hat"] == [1.0]
