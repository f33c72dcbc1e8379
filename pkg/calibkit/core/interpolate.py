"""
Kernel interpolation for the Calibration Toolkit
Fits interpolants, predicts, and computes native norms, PSS and profile likelihoods
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular

from calibkit import settings
from calibkit.core.design import BoxDomain, Design
from calibkit.core.kernels import KernelSpec, as_points, gram
from calibkit.errors import InputError, IllConditionedGramError, UndefinedLikelihoodError

logger = logging.getLogger(__name__)


def _gram_diagnostics(matrix, attempted):
    """Summary of a Gram matrix whose factorization failed"""
    eigenvalues = np.linalg.eigvalsh(matrix)
    smallest, largest = float(eigenvalues[0]), float(eigenvalues[-1])
    condition = largest / smallest if smallest > 0 else float("inf")
    return {
        "size": int(matrix.shape[0]),
        "attempted_nuggets": [float(v) for v in attempted],
        "min_eigenvalue": smallest,
        "max_eigenvalue": largest,
        "condition_estimate": condition,
    }


def factor_gram(design, kernel, policy=None):
    """Cholesky-factor the Gram matrix of a design, escalating the nugget if allowed

    Args:
        design: Design (or (n, d) array of distinct points)
        kernel: KernelSpec
        policy: NuggetPolicy (defaults to adaptive 1e-12 .. 1e-6)

    Returns:
        tuple: (lower Cholesky factor of Phi + nugget*I, nugget used)

    Raises:
        IllConditionedGramError: Every allowed nugget failed
    """
    policy = policy or settings.DEFAULT_NUGGET
    matrix = gram(kernel, design)
    identity = np.eye(matrix.shape[0])
    attempted = []
    for nugget in policy.candidates():
        attempted.append(nugget)
        try:
            factor = cholesky(matrix + nugget * identity, lower=True, check_finite=False)
        except LinAlgError:
            continue
        # LAPACK may return a factor with a tiny or NaN pivot instead of failing
        if np.all(np.isfinite(factor)) and np.all(np.diag(factor) > 0):
            if nugget > 0:
                logger.warning("Gram matrix (n=%d, %s) needed nugget %.1e", matrix.shape[0], kernel, nugget)
            return factor, nugget
    raise IllConditionedGramError(
        f"Cholesky failed for the {matrix.shape[0]}x{matrix.shape[0]} Gram matrix of {kernel}",
        _gram_diagnostics(matrix, attempted),
    )


def whitened_norm_sq(factor, values):
    """|L^-1 y|^2 = y^T (Phi + nugget I)^-1 y from a lower Cholesky factor"""
    whitened = solve_triangular(factor, values, lower=True, check_finite=False)
    return float(np.dot(whitened, whitened))


def log_det_from_factor(factor):
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def _as_design(design):
    if isinstance(design, Design):
        return design
    return Design.from_points(design)


@dataclass(frozen=True, eq=False)
class Interpolator:
    """A fitted kernel interpolant y_hat(x) = sum_i u_i Phi(x, x_i)"""

    design: Design
    kernel: KernelSpec
    values: np.ndarray
    coefficients: np.ndarray
    chol: np.ndarray
    nugget_used: float

    @property
    def dim(self):
        return self.design.dim

    def to_dict(self):
        return {
            "domain": self.design.domain.to_dict(),
            "design": self.design.to_list(),
            "kernel": self.kernel.to_dict(),
            "values": self.values.tolist(),
            "coefficients": self.coefficients.tolist(),
            "nugget_used": self.nugget_used,
        }

    @classmethod
    def from_dict(cls, data):
        """Rebuild a fitted interpolator, refactoring at the recorded nugget"""
        try:
            domain = BoxDomain.from_dict(data["domain"])
            design = Design(np.asarray(data["design"], dtype=float), domain)
            kernel = KernelSpec.from_dict(data["kernel"])
            values = np.asarray(data["values"], dtype=float)
            nugget = float(data["nugget_used"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed interpolator record: {exc}") from exc
        return fit(design, values, kernel, settings.NuggetPolicy.pinned(nugget))


def fit(design, values, kernel, nugget_policy=None):
    """Fit a kernel interpolant

    Args:
        design: Design with distinct points
        values: Responses, one per design point
        kernel: KernelSpec
        nugget_policy: NuggetPolicy ("none" fails on Cholesky breakdown)

    Returns:
        Interpolator: Solves (Phi + nugget*I) u = Y
    """
    design = _as_design(design)
    values = np.array(values, dtype=float).reshape(-1)
    if values.shape[0] != design.size:
        raise InputError(f"got {values.shape[0]} values for {design.size} design points")
    if not np.all(np.isfinite(values)):
        raise InputError("responses must be finite")
    factor, nugget = factor_gram(design, kernel, nugget_policy)
    coefficients = cho_solve((factor, True), values, check_finite=False)
    for array in (values, coefficients, factor):
        array.setflags(write=False)
    logger.debug("fitted %s interpolant on %d points (nugget %.1e)", kernel, design.size, nugget)
    return Interpolator(design, kernel, values, coefficients, factor, float(nugget))


def predict_many(interp, points):
    """Predictions at an (m, d) array of points"""
    points = as_points(points, dim=interp.dim)
    return interp.kernel.matrix(points, interp.design.points) @ interp.coefficients


def predict(interp, x):
    """Prediction sum_i u_i Phi(x, x_i) at a single point"""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    if point.ndim != 1 or point.shape[0] != interp.dim:
        raise InputError(f"point has dimension {point.size}, interpolant has {interp.dim}")
    return float(predict_many(interp, point.reshape(1, -1))[0])


def native_norm_sq(interp):
    """Native-space norm squared of the interpolant, Y^T (Phi + nugget I)^-1 Y"""
    return whitened_norm_sq(interp.chol, interp.values)


def log_det(interp):
    """log |Phi + nugget I| from the Cholesky factor"""
    return log_det_from_factor(interp.chol)


def pss(values, design, kernel, nugget_policy=None):
    """Pivoted sum of squares eps^T Phi^-1 eps (native norm squared of the fit)"""
    return native_norm_sq(fit(design, values, kernel, nugget_policy))


def profile_loglik_from_factor(factor, values):
    """-(n/2) log(Y^T Phi^-1 Y) - (1/2) log|Phi| with sigma^2 profiled out"""
    n = values.shape[0]
    if n < 2:
        raise InputError("profile likelihood needs at least two observations")
    quadratic = whitened_norm_sq(factor, values)
    if not np.any(values) or quadratic <= 0.0:
        raise UndefinedLikelihoodError("profile likelihood is undefined for an all-zero response")
    return float(-0.5 * n * np.log(quadratic) - 0.5 * log_det_from_factor(factor))


def profile_loglik(values, design, kernel, nugget_policy=None):
    """Profile log-likelihood of a zero-mean GP model with correlation `kernel`

    Raises:
        UndefinedLikelihoodError: All responses are zero
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] < 2:
        raise InputError("profile likelihood needs at least two observations")
    if not np.any(values):
        raise UndefinedLikelihoodError("profile likelihood is undefined for an all-zero response")
    interp = fit(design, values, kernel, nugget_policy)
    return profile_loglik_from_factor(interp.chol, interp.values)
