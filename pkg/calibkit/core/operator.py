"""
Kernel integral operator for the Calibration Toolkit
Nystrom eigenpairs of kappa(f)(x) = int Phi(x, t) f(t) dt and the KL density exponent

Kernels are duck-typed: anything with a matrix(X, Y) method works, so a
constant kernel can stand in for a KernelSpec in diagnostics and tests.
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.linalg import eigh

from calibkit import settings
from calibkit.core.kernels import as_points
from calibkit.core.numerics import QuadratureSpec, evaluate_on_nodes
from calibkit.errors import InputError, RankDeficiencyError

logger = logging.getLogger(__name__)

# |int f| below this counts as zero for the sign convention
_SIGN_TOL = 1e-10


def _coordinate_columns(dim):
    return ["x"] if dim == 1 else [f"x{i + 1}" for i in range(dim)]


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Leading eigenpairs of the kernel integral operator on a box

    eigenvalues descend; node_values[:, i] holds f_i on the quadrature nodes,
    normalized so that sum_j w_j f_i(t_j)**2 = 1. all_eigenvalues is the full
    discrete spectrum.
    """

    kernel: object
    quadrature: QuadratureSpec
    eigenvalues: np.ndarray
    node_values: np.ndarray
    all_eigenvalues: np.ndarray

    @property
    def num_modes(self):
        return self.eigenvalues.shape[0]

    @property
    def dim(self):
        return self.quadrature.domain.dim

    def _check_index(self, index):
        if int(index) != index or not 0 <= index < self.num_modes:
            raise InputError(f"mode index must lie in [0, {self.num_modes}), got {index}")
        return int(index)

    def evaluate(self, index, points):
        """Nystrom extension f_i(x) = lambda_i^-1 sum_j w_j Phi(x, t_j) f_i(t_j)"""
        index = self._check_index(index)
        points = as_points(points, dim=self.dim)
        weighted = self.quadrature.weights * self.node_values[:, index]
        cross = np.asarray(self.kernel.matrix(points, self.quadrature.nodes), dtype=float)
        return cross @ weighted / self.eigenvalues[index]

    def eigenfunction(self, index, scale=1.0):
        """Vectorized callable for scale * f_i"""
        index = self._check_index(index)
        return lambda points: scale * self.evaluate(index, points)

    def orthonormality(self):
        """Gram matrix of the retained modes in the quadrature inner product"""
        weighted = self.node_values * self.quadrature.weights[:, None]
        return self.node_values.T @ weighted

    def residuals(self):
        """Quadrature L2 norm of kappa(f_i) - lambda_i f_i for each retained mode"""
        nodes, weights = self.quadrature.nodes, self.quadrature.weights
        matrix = np.asarray(self.kernel.matrix(nodes, nodes), dtype=float)
        applied = matrix @ (weights[:, None] * self.node_values)
        gap = applied - self.node_values * self.eigenvalues[None, :]
        return np.sqrt(weights @ np.square(gap))

    def mode_native_norm_sq(self, index):
        """Native norm squared of f_i, which is 1 / lambda_i"""
        return 1.0 / float(self.eigenvalues[self._check_index(index)])

    def eigenvalue_frame(self):
        return pd.DataFrame({
            "mode": np.arange(1, self.num_modes + 1),
            "eigenvalue": self.eigenvalues,
        })

    def export_frame(self, points, scale=1.0):
        """Eigenfunction samples on a point set as a DataFrame (x..., f1, f2, ...)"""
        points = as_points(points, dim=self.dim)
        frame = pd.DataFrame(points, columns=_coordinate_columns(self.dim))
        for index in range(self.num_modes):
            frame[f"f{index + 1}"] = scale * self.evaluate(index, points)
        return frame


def _fix_sign(vector, weights):
    # int f >= 0, or f(first node) > 0 when the integral vanishes
    integral = float(np.dot(weights, vector))
    if abs(integral) > _SIGN_TOL:
        return vector if integral > 0 else -vector
    return vector if vector[0] >= 0 else -vector


def nystrom_eig(kernel, domain, quad_order=None, num_modes=5):
    """Nystrom eigendecomposition of the kernel integral operator

    Args:
        kernel: KernelSpec (or any object with matrix(X, Y))
        domain: BoxDomain of dimension 1 or 2
        quad_order: Gauss-Legendre order per dimension (default 128 in 1-D, 32 in 2-D)
        num_modes: Number of leading eigenpairs to keep

    Returns:
        EigenSystem: Eigenvalues in descending order with unit-L2, sign-fixed
        eigenfunctions

    Raises:
        InputError: quad_order < num_modes or an unsupported dimension
        RankDeficiencyError: A retained eigenvalue is not positive
    """
    if quad_order is None:
        quad_order = settings.EIGEN_QUAD_ORDER if domain.dim == 1 else settings.EIGEN_QUAD_ORDER_2D
    if domain.dim > 2:
        raise InputError(f"eigenproblems are supported in 1-D and 2-D, got dimension {domain.dim}")
    if int(num_modes) != num_modes or num_modes < 1:
        raise InputError(f"num_modes must be a positive integer, got {num_modes}")
    if quad_order < num_modes:
        raise InputError(f"quad_order {quad_order} is smaller than num_modes {num_modes}")
    num_modes = int(num_modes)

    quad = QuadratureSpec(domain, quad_order)
    nodes, weights = quad.nodes, quad.weights
    root = np.sqrt(weights)
    matrix = np.asarray(kernel.matrix(nodes, nodes), dtype=float)
    # W^1/2 K W^1/2 is symmetric with the same spectrum as K W
    operator = root[:, None] * matrix * root[None, :]
    operator = 0.5 * (operator + operator.T)
    values, vectors = eigh(operator)
    values, vectors = values[::-1], vectors[:, ::-1]

    retained = values[:num_modes]
    floor = values.shape[0] * np.finfo(float).eps * max(abs(values[0]), 1.0)
    if np.any(retained <= floor):
        bad = int(np.argmax(retained <= floor))
        raise RankDeficiencyError(
            f"eigenvalue {bad + 1} of the discretized operator is {retained[bad]:.3e}; "
            f"keep fewer than {bad + 1} modes"
        )

    node_values = vectors[:, :num_modes] / root[:, None]
    node_values = np.column_stack([_fix_sign(node_values[:, i], weights) for i in range(num_modes)])

    retained = retained.copy()
    all_values = values.copy()
    node_values = node_values.copy()
    for array in (retained, node_values, all_values):
        array.setflags(write=False)
    logger.debug("Nystrom on %d nodes: leading eigenvalues %s", quad.size, np.round(retained, 6).tolist())
    return EigenSystem(kernel, quad, retained, node_values, all_values)


def mode_coefficients(f, eig, truncation=None):
    """L2 inner products <f, f_i> for the first `truncation` modes"""
    truncation = eig.num_modes if truncation is None else truncation
    if int(truncation) != truncation or not 1 <= truncation <= eig.num_modes:
        raise InputError(f"truncation must lie in [1, {eig.num_modes}], got {truncation}")
    values = evaluate_on_nodes(f, eig.quadrature)
    weighted = eig.quadrature.weights * values
    return weighted @ eig.node_values[:, :int(truncation)]


def kl_density_exponent(f, eig, truncation=None):
    """Log-density (up to a constant) of f under the truncated KL expansion

    Returns -sum_{i<=K} <f, f_i>**2 / (2 lambda_i**2); larger values mean f is
    more plausible as a sample path of a GP with covariance Phi.
    """
    if truncation is None:
        truncation = min(settings.KL_TRUNCATION, eig.num_modes)
    coefficients = mode_coefficients(f, eig, truncation)
    lambdas = eig.eigenvalues[:coefficients.shape[0]]
    return float(-np.sum(np.square(coefficients) / (2.0 * np.square(lambdas))))
