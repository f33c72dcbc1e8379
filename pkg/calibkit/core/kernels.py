"""
Positive-definite kernel families for the Calibration Toolkit
Gaussian and half-integer Matern correlation functions and Gram assembly
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from calibkit.errors import DegenerateDesignError, InputError

logger = logging.getLogger(__name__)

MATERN_NUS = (0.5, 1.5, 2.5, 3.5)


class KernelFamily(Enum):
    GAUSSIAN = "gaussian"
    MATERN = "matern"


def _matern_closed_form(nu, z):
    """Half-integer Matern correlation as exp(-z) times a polynomial in z"""
    if nu == 0.5:
        poly = 1.0
    elif nu == 1.5:
        poly = 1.0 + z
    elif nu == 2.5:
        poly = 1.0 + z + z ** 2 / 3.0
    else:  # 3.5
        poly = 1.0 + z + 2.0 * z ** 2 / 5.0 + z ** 3 / 15.0
    return poly * np.exp(-z)


def as_points(points, dim=None, name="points"):
    """Coerce points to a finite (n, d) float array

    Args:
        points: Scalar, 1-D sequence (read as n points in 1-D when dim is 1 or
            unknown) or (n, d) array
        dim: Expected dimension, checked when given
        name: Label used in error messages

    Returns:
        np.ndarray: Array of shape (n, d)
    """
    array = np.asarray(points, dtype=float)
    if array.ndim == 0:
        array = array.reshape(1, 1)
    elif array.ndim == 1:
        array = array.reshape(1, -1) if dim not in (None, 1) else array.reshape(-1, 1)
    elif array.ndim != 2:
        raise InputError(f"{name} must be a 2-D array of points, got shape {array.shape}")
    if dim is not None and array.shape[1] != dim:
        raise InputError(f"{name} have dimension {array.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{name} contain non-finite coordinates")
    return array


def as_point(point, dim=None, name="point"):
    """Coerce a single point to a finite (d,) float array"""
    array = np.atleast_1d(np.asarray(point, dtype=float))
    if array.ndim != 1:
        raise InputError(f"{name} must be a vector, got shape {array.shape}")
    if dim is not None and array.shape[0] != dim:
        raise InputError(f"{name} has dimension {array.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(array)):
        raise InputError(f"{name} has non-finite coordinates")
    return array


@dataclass(frozen=True)
class KernelSpec:
    """A member of a correlation-function family

    Gaussian:  Phi(s, t) = exp(-phi * |s - t|**2)
    Matern:    Phi(s, t) = 2**(1-nu) / Gamma(nu) * z**nu * K_nu(z),
               z = 2 * sqrt(nu) * phi * |s - t|, nu in {1/2, 3/2, 5/2, 7/2}
    """

    family: KernelFamily
    phi: float
    nu: Optional[float] = None

    def __post_init__(self):
        family = self.family
        if not isinstance(family, KernelFamily):
            try:
                family = KernelFamily(str(family).lower())
            except ValueError as exc:
                raise InputError(f"unknown kernel family {self.family!r}") from exc
            object.__setattr__(self, "family", family)
        phi = float(self.phi)
        if not (math.isfinite(phi) and phi > 0):
            raise InputError(f"kernel scale phi must be positive, got {self.phi!r}")
        object.__setattr__(self, "phi", phi)
        if family is KernelFamily.MATERN:
            if self.nu is None or float(self.nu) not in MATERN_NUS:
                raise InputError(f"Matern smoothness must be one of {MATERN_NUS}, got {self.nu!r}")
            object.__setattr__(self, "nu", float(self.nu))
        elif self.nu is not None:
            raise InputError("smoothness nu only applies to the Matern family")

    @classmethod
    def gaussian(cls, phi=1.0):
        return cls(KernelFamily.GAUSSIAN, phi)

    @classmethod
    def matern(cls, nu, phi=1.0):
        return cls(KernelFamily.MATERN, phi, nu)

    @property
    def scale_factor(self):
        """Multiplier a such that k_phi(s, t) = k_1(a*s, a*t)"""
        if self.family is KernelFamily.GAUSSIAN:
            return math.sqrt(self.phi)
        return self.phi

    def with_phi(self, phi):
        return KernelSpec(self.family, phi, self.nu)

    def correlation(self, distance):
        """Correlation as a function of Euclidean distance (array friendly)"""
        distance = np.asarray(distance, dtype=float)
        if self.family is KernelFamily.GAUSSIAN:
            return np.exp(-self.phi * distance ** 2)
        z = 2.0 * math.sqrt(self.nu) * self.phi * distance
        return _matern_closed_form(self.nu, z)

    def matrix(self, X, Y):
        """Cross-kernel matrix (Phi(x_i, y_j))_ij between two point sets"""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        if X.shape[1] != Y.shape[1]:
            raise InputError(f"point sets have dimensions {X.shape[1]} and {Y.shape[1]}")
        if self.family is KernelFamily.GAUSSIAN:
            return np.exp(-self.phi * cdist(X, Y, "sqeuclidean"))
        return self.correlation(cdist(X, Y))

    def to_dict(self):
        data = {"family": self.family.value, "phi": self.phi}
        if self.nu is not None:
            data["nu"] = self.nu
        return data

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "family" not in data or "phi" not in data:
            raise InputError(f"kernel spec needs 'family' and 'phi', got {data!r}")
        return cls(data["family"], data["phi"], data.get("nu"))

    def __str__(self):
        if self.family is KernelFamily.MATERN:
            return f"matern(nu={self.nu:g}, phi={self.phi:g})"
        return f"gaussian(phi={self.phi:g})"


def eval_kernel(spec, s, t):
    """Evaluate Phi(s, t) for two points of the same dimension

    Returns:
        float: Value in (0, 1], exactly 1 when s == t
    """
    s = as_point(s, name="s")
    t = as_point(t, dim=s.shape[0], name="t")
    if np.array_equal(s, t):
        return 1.0
    value = spec.correlation(np.linalg.norm(s - t))
    return float(value)


def gram(spec, design):
    """Gram matrix of a design (a Design or an (n, d) array)

    Raises:
        DegenerateDesignError: Two design points coincide
    """
    points = design.points if hasattr(design, "points") else as_points(design)
    distances = cdist(points, points)
    n = points.shape[0]
    if n > 1:
        off_diagonal = distances[~np.eye(n, dtype=bool)]
        if np.any(off_diagonal == 0.0):
            raise DegenerateDesignError("design contains duplicate points")
    matrix = spec.matrix(points, points)
    # symmetric with exact unit diagonal
    matrix = 0.5 * (matrix + matrix.T)
    np.fill_diagonal(matrix, 1.0)
    return matrix
