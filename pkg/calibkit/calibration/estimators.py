"""
Calibration estimators for the Calibration Toolkit
KO, profile KO, modified KO, least L2 distance, OLS and the L2 projection oracle
"""

import logging

import numpy as np
import pandas as pd

from calibkit import settings
from calibkit.calibration.problem import CalibrationMethod, CalibrationResult
from calibkit.core.design import fill_distance
from calibkit.core.interpolate import (
    factor_gram,
    fit,
    log_det_from_factor,
    predict_many,
    whitened_norm_sq,
)
from calibkit.core.numerics import QuadratureSpec, minimize_box, parallel_map
from calibkit.errors import IllConditionedGramError, InputError

logger = logging.getLogger(__name__)


def _require_cheap(problem, method):
    if problem.is_expensive:
        raise InputError(f"{method.value} calibration needs a cheap simulator")


def _require_pairs(problem):
    if problem.size < 2:
        raise InputError("KO calibration needs at least two physical observations")


def _make_result(problem, method, outcome, value, diagnostics):
    theta_hat = np.asarray(outcome.argmin, dtype=float)
    index, label = problem.locate(theta_hat)
    diagnostics = dict(diagnostics)
    diagnostics["optimizer"] = outcome.summary()
    diagnostics.setdefault("fill_distance", fill_distance(problem.physical_design))
    if problem.is_expensive:
        diagnostics.setdefault("simulator_fill_distance", fill_distance(problem.simulator.design))
    logger.info("%s on %r selected theta=%s (objective %.6g)",
                method.value, problem.name, label or theta_hat.tolist(), value)
    return CalibrationResult(method, theta_hat, float(value), index, label, diagnostics)


def _quadrature(problem, quad):
    if quad is None:
        return QuadratureSpec(problem.domain)
    if isinstance(quad, QuadratureSpec):
        return quad
    return QuadratureSpec(problem.domain, int(quad))


def ko_calibrate(problem, kernel, nugget=None, optimizer=None, threads=None):
    """KO calibration: minimize the PSS eps^T Phi^-1 eps over Theta

    The Gram matrix of the physical design is factored once and reused for
    every parameter value.

    Args:
        problem: CalibrationProblem with a cheap simulator
        kernel: KernelSpec for the discrepancy process
        nugget: NuggetPolicy
        optimizer: OptimizerSettings for box regions
        threads: Worker cap

    Returns:
        CalibrationResult: objective_value is the minimized PSS
    """
    _require_cheap(problem, CalibrationMethod.KO)
    _require_pairs(problem)
    factor, nugget_used = factor_gram(problem.physical_design, kernel, nugget)

    def objective(theta):
        return whitened_norm_sq(factor, problem.residuals(theta))

    outcome = minimize_box(objective, problem.theta_region, optimizer, threads)
    value = objective(outcome.argmin)
    diagnostics = {"kernel": kernel.to_dict(), "nugget_used": nugget_used}
    if problem.is_finite:
        diagnostics["trace"] = outcome.trace
    return _make_result(problem, CalibrationMethod.KO, outcome, value, diagnostics)


def _profile_at(problem, kernel, nugget, optimizer, threads):
    """Best theta for one phi and the profile log-likelihood there"""
    factor, nugget_used = factor_gram(problem.physical_design, kernel, nugget)
    n = problem.size
    half_log_det = 0.5 * log_det_from_factor(factor)

    def objective(theta):
        return whitened_norm_sq(factor, problem.residuals(theta))

    outcome = minimize_box(objective, problem.theta_region, optimizer, threads)
    pss_value = objective(outcome.argmin)
    # an exactly matching simulator has unbounded likelihood
    loglik = np.inf if pss_value <= 0.0 else -0.5 * n * np.log(pss_value) - half_log_det
    return outcome, float(loglik), pss_value, nugget_used


def ko_profile_calibrate(problem, kernel, phi_grid, nugget=None, optimizer=None, threads=None):
    """Joint estimate of (theta, phi) by maximizing the profile log-likelihood

    For each phi on the grid the inner maximization over theta reduces to
    minimizing the PSS, since log|Phi| does not depend on theta. Grid values
    whose Gram matrix cannot be factored are skipped with a warning.

    Args:
        problem: CalibrationProblem with a cheap simulator
        kernel: KernelSpec whose family and smoothness are kept; phi is replaced
        phi_grid: Increasing sequence of positive scale values

    Returns:
        tuple: (CalibrationResult, phi_hat); objective_value is the maximized
        profile log-likelihood
    """
    _require_cheap(problem, CalibrationMethod.PROFILE_KO)
    _require_pairs(problem)
    phi_grid = [float(phi) for phi in np.atleast_1d(phi_grid)]
    if not phi_grid:
        raise InputError("phi grid is empty")

    def attempt(phi):
        try:
            return phi, _profile_at(problem, kernel.with_phi(phi), nugget, optimizer, 1)
        except IllConditionedGramError as exc:
            logger.warning("skipping phi=%.6g: %s", phi, exc)
            return phi, None

    attempts = [(phi, found) for phi, found in parallel_map(attempt, phi_grid, threads) if found is not None]
    if not attempts:
        raise IllConditionedGramError("no phi value on the grid gave a factorable Gram matrix",
                                      {"phi_grid": phi_grid})
    # first (smallest) phi wins ties
    best_phi, (outcome, loglik, pss_value, nugget_used) = max(attempts, key=lambda item: item[1][1])
    diagnostics = {
        "kernel": kernel.with_phi(best_phi).to_dict(),
        "phi_hat": best_phi,
        "pss": pss_value,
        "nugget_used": nugget_used,
        "phi_evaluated": len(attempts),
        "phi_skipped": len(phi_grid) - len(attempts),
    }
    result = _make_result(problem, CalibrationMethod.PROFILE_KO, outcome, loglik, diagnostics)
    return result, best_phi


def profile_loglik_table(problem, kernel, phi_grid, nugget=None, threads=None):
    """Profile log-likelihood l(theta, phi) for every candidate and grid value

    Returns:
        pd.DataFrame: Columns candidate, phi, loglik, pss, nugget_used (long format)
    """
    if not problem.is_finite:
        raise InputError("the likelihood table needs a finite candidate set")
    _require_pairs(problem)
    region = problem.theta_region
    residuals = [problem.residuals(theta) for theta in region.points]
    n = problem.size

    def rows_for(phi):
        factor, nugget_used = factor_gram(problem.physical_design, kernel.with_phi(phi), nugget)
        half_log_det = 0.5 * log_det_from_factor(factor)
        rows = []
        for label, eps in zip(region.labels, residuals):
            pss_value = whitened_norm_sq(factor, eps)
            loglik = np.inf if pss_value <= 0.0 else -0.5 * n * np.log(pss_value) - half_log_det
            rows.append({"candidate": label, "phi": phi, "loglik": float(loglik),
                         "pss": pss_value, "nugget_used": nugget_used})
        return rows

    blocks = parallel_map(rows_for, [float(phi) for phi in np.atleast_1d(phi_grid)], threads)
    return pd.DataFrame([row for block in blocks for row in block],
                        columns=["candidate", "phi", "loglik", "pss", "nugget_used"])


def modified_ko_calibrate(problem, kernel, schedule=None, nugget=None, optimizer=None,
                          threads=None, fill_resolution=None):
    """KO calibration with the scale tied to the design: phi = c * h(D)**(-gamma)

    Returns:
        CalibrationResult: As ko_calibrate, with phi and h recorded in diagnostics
    """
    _require_cheap(problem, CalibrationMethod.MODIFIED_KO)
    schedule = schedule or settings.DEFAULT_SCHEDULE
    h = fill_distance(problem.physical_design, fill_resolution)
    phi = schedule.phi(h)
    logger.info("modified KO: h(D)=%.6g gives phi=%.6g", h, phi)
    result = ko_calibrate(problem, kernel.with_phi(phi), nugget, optimizer, threads)
    result.method = CalibrationMethod.MODIFIED_KO
    result.diagnostics.update({"phi": phi, "fill_distance": h, "schedule": schedule.to_dict()})
    return result


def _squared_l2_objective(problem, quad, target):
    """theta -> sum_j w_j (target_j - y^s(t_j, theta))**2 on the quadrature nodes"""
    nodes, weights = quad.nodes, quad.weights

    def objective(theta):
        gap = target - problem.simulate(nodes, theta)
        return float(np.dot(weights, gap * gap))

    return objective


def l2_calibrate(problem, kernel, quad=None, nugget=None, optimizer=None, threads=None):
    """Least L2 distance calibration

    Fits the physical interpolant y_hat^p on (D, y^p(D)) and minimizes
    |y_hat^p - y^s(., theta)|_L2 (or the surrogate y_hat^s for expensive codes).

    Returns:
        CalibrationResult: objective_value is the minimized L2 distance
    """
    quad = _quadrature(problem, quad)
    physical_fit = fit(problem.physical_design, problem.physical_values, kernel, nugget)
    target = predict_many(physical_fit, quad.nodes)
    squared = _squared_l2_objective(problem, quad, target)
    outcome = minimize_box(squared, problem.theta_region, optimizer, threads)
    value = np.sqrt(squared(outcome.argmin))
    diagnostics = {
        "kernel": kernel.to_dict(),
        "nugget_used": physical_fit.nugget_used,
        "quad_order": quad.order,
    }
    if problem.is_expensive:
        diagnostics["simulator_nugget_used"] = problem.simulator.surrogate.nugget_used
    return _make_result(problem, CalibrationMethod.L2, outcome, value, diagnostics)


def l2_projection(problem, quad=None, optimizer=None, threads=None):
    """L2 projection theta* = argmin |y^p - y^s(., theta)|_L2 with the exact y^p"""
    return l2_projection_result(problem, quad, optimizer, threads).theta_hat


def l2_projection_result(problem, quad=None, optimizer=None, threads=None):
    quad = _quadrature(problem, quad)
    target = problem.physical(quad.nodes)
    squared = _squared_l2_objective(problem, quad, target)
    outcome = minimize_box(squared, problem.theta_region, optimizer, threads)
    value = np.sqrt(squared(outcome.argmin))
    return _make_result(problem, CalibrationMethod.L2_PROJECTION, outcome, value,
                        {"quad_order": quad.order})


def ols_calibrate(problem, optimizer=None, threads=None):
    """Ordinary least squares: minimize sum_i (y^p(x_i) - y^s(x_i, theta))**2"""

    def objective(theta):
        eps = problem.residuals(theta)
        return float(np.dot(eps, eps))

    outcome = minimize_box(objective, problem.theta_region, optimizer, threads)
    return _make_result(problem, CalibrationMethod.OLS, outcome, objective(outcome.argmin), {})


def _run_ko(problem, ctx):
    return ko_calibrate(problem, ctx["kernel"], ctx["nugget"], ctx["optimizer"], ctx["threads"])


def _run_profile(problem, ctx):
    result, _ = ko_profile_calibrate(problem, ctx["kernel"], ctx["phi_grid"], ctx["nugget"],
                                     ctx["optimizer"], ctx["threads"])
    return result


def _run_modified(problem, ctx):
    return modified_ko_calibrate(problem, ctx["kernel"], ctx["schedule"], ctx["nugget"],
                                 ctx["optimizer"], ctx["threads"])


def _run_l2(problem, ctx):
    return l2_calibrate(problem, ctx["kernel"], ctx["quad"], ctx["nugget"], ctx["optimizer"], ctx["threads"])


def _run_ols(problem, ctx):
    return ols_calibrate(problem, ctx["optimizer"], ctx["threads"])


def _run_projection(problem, ctx):
    return l2_projection_result(problem, ctx["quad"], ctx["optimizer"], ctx["threads"])


# method name -> runner(problem, context)
METHODS = {
    CalibrationMethod.KO.value: _run_ko,
    CalibrationMethod.PROFILE_KO.value: _run_profile,
    CalibrationMethod.MODIFIED_KO.value: _run_modified,
    CalibrationMethod.L2.value: _run_l2,
    CalibrationMethod.OLS.value: _run_ols,
    CalibrationMethod.L2_PROJECTION.value: _run_projection,
}

_KO_FAMILY = {CalibrationMethod.KO.value, CalibrationMethod.PROFILE_KO.value, CalibrationMethod.MODIFIED_KO.value}


def applicable_methods(problem):
    """Method names that can run on this problem, in registry order"""
    names = []
    for name in METHODS:
        if name in _KO_FAMILY and problem.is_expensive:
            continue
        if name == CalibrationMethod.L2_PROJECTION.value and problem.physical_evaluator is None:
            continue
        names.append(name)
    return names


def calibrate(problem, method, kernel=None, phi_grid=None, schedule=None, quad=None,
              nugget=None, optimizer=None, threads=None):
    """Run a calibration method by name

    Args:
        problem: CalibrationProblem
        method: One of METHODS
        kernel: KernelSpec for the physical data (needed by ko, profile_ko, modified_ko, l2)
        phi_grid: Scale grid for profile_ko (defaults to 1:6:51)
        schedule: Schedule for modified_ko
        quad: QuadratureSpec or order per dimension for l2 and l2_projection
        nugget: NuggetPolicy
        optimizer: OptimizerSettings
        threads: Worker cap

    Returns:
        CalibrationResult
    """
    name = method.value if isinstance(method, CalibrationMethod) else str(method)
    if name not in METHODS:
        raise InputError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
    if kernel is None and name not in (CalibrationMethod.OLS.value, CalibrationMethod.L2_PROJECTION.value):
        raise InputError(f"method {name} needs a kernel")
    context = {
        "kernel": kernel,
        "phi_grid": settings.parse_phi_grid(settings.PHI_GRID_DEFAULT) if phi_grid is None else phi_grid,
        "schedule": schedule,
        "quad": quad,
        "nugget": nugget,
        "optimizer": optimizer,
        "threads": threads,
    }
    return METHODS[name](problem, context)
