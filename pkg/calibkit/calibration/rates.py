"""
Convergence-rate harness for the Calibration Toolkit
Runs estimators along a refining design sequence and fits log-log slopes
"""

import logging

import numpy as np
import pandas as pd

from calibkit.calibration.estimators import l2_projection
from calibkit.core.design import fill_distance
from calibkit.core.numerics import parallel_map
from calibkit.errors import InputError

logger = logging.getLogger(__name__)


def fit_slope(h, errors):
    """Least-squares slope of log(error) against log(h)

    Zero errors cannot be placed on a log scale and are dropped. Returns
    NaN when fewer than two usable points remain.
    """
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    usable = (h > 0) & (errors > 0) & np.isfinite(errors)
    if np.count_nonzero(usable) < len(errors):
        logger.warning("dropping %d zero or non-finite errors from the slope fit",
                       len(errors) - np.count_nonzero(usable))
    if np.count_nonzero(usable) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[usable]), np.log(errors[usable]), 1)
    return float(slope)


def run_rate_sweep(problem_factory, sizes, estimators, reference=None, quad=None, threads=None):
    """Run estimators over a sequence of design sizes

    Args:
        problem_factory: Callable n -> CalibrationProblem
        sizes: Strictly increasing design sizes
        estimators: Mapping name -> callable(problem) returning a CalibrationResult
        reference: Limit theta_ref; computed by the L2 projection oracle when omitted
        quad: Quadrature for the oracle
        threads: Worker cap (sizes run in parallel)

    Returns:
        pd.DataFrame: One row per (n, estimator) with h, theta estimates,
        candidate label and error |theta_hat - theta_ref|
    """
    sizes = [int(n) for n in sizes]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputError(f"design sizes must be strictly increasing, got {sizes}")
    if not estimators:
        raise InputError("no estimators to sweep")
    if reference is None:
        reference = l2_projection(problem_factory(sizes[0]), quad, threads=threads)
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    logger.info("rate sweep over n=%s against theta_ref=%s", sizes, reference.tolist())

    def run_size(n):
        problem = problem_factory(n)
        h = fill_distance(problem.physical_design)
        rows = []
        for name, estimator in estimators.items():
            result = estimator(problem)
            theta_hat = np.atleast_1d(result.theta_hat)
            row = {"n": n, "h": h, "estimator": name}
            for i, value in enumerate(theta_hat):
                row[f"theta{i + 1}"] = float(value)
            row["candidate"] = result.candidate_label or ""
            row["error"] = float(np.linalg.norm(theta_hat - reference))
            rows.append(row)
            logger.debug("n=%d %s: error %.3e", n, name, row["error"])
        return rows

    blocks = parallel_map(run_size, sizes, threads)
    frame = pd.DataFrame([row for block in blocks for row in block])
    frame.attrs["reference"] = reference.tolist()
    return frame


def rate_slopes(frame):
    """Fitted slope per estimator from a sweep frame"""
    rows = []
    for name, group in frame.groupby("estimator", sort=False):
        rows.append({"estimator": name, "slope": fit_slope(group["h"], group["error"])})
    return pd.DataFrame(rows, columns=["estimator", "slope"])
