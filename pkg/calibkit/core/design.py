"""
Experimental designs for the Calibration Toolkit
Box domains, equispaced and Halton designs, and grid-approximated fill distance
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import qmc

from calibkit import settings
from calibkit.core.kernels import as_points
from calibkit.errors import DegenerateDesignError, InputError

logger = logging.getLogger(__name__)

# Rows of the fill-distance grid scanned per cdist call
_FILL_CHUNK = 4096


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower, upper] in R^d"""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) == 0 or len(lower) != len(upper):
            raise InputError("box bounds must be nonempty and of equal length")
        if not all(np.isfinite(lower)) or not all(np.isfinite(upper)):
            raise InputError("box bounds must be finite")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise InputError(f"box needs lower < upper in every dimension, got {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def interval(cls, lower, upper):
        return cls((lower,), (upper,))

    @property
    def dim(self):
        return len(self.lower)

    @property
    def lower_array(self):
        return np.array(self.lower)

    @property
    def upper_array(self):
        return np.array(self.upper)

    @property
    def widths(self):
        return self.upper_array - self.lower_array

    @property
    def volume(self):
        return float(np.prod(self.widths))

    def contains(self, points, tol=0.0):
        """Row-wise inclusive membership test"""
        points = as_points(points, dim=self.dim)
        return np.all((points >= self.lower_array - tol) & (points <= self.upper_array + tol), axis=1)

    def from_unit(self, unit_points):
        """Affine map from [0, 1]^d into the box"""
        return self.lower_array + np.asarray(unit_points, dtype=float) * self.widths

    def product(self, other):
        """Cartesian product box (used for Omega x Theta)"""
        return BoxDomain(self.lower + other.lower, self.upper + other.upper)

    def to_dict(self):
        return {"lower": list(self.lower), "upper": list(self.upper)}

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "lower" not in data or "upper" not in data:
            raise InputError(f"box domain needs 'lower' and 'upper', got {data!r}")
        return cls(tuple(np.atleast_1d(data["lower"])), tuple(np.atleast_1d(data["upper"])))


class Design:
    """Ordered set of distinct points inside a box domain

    Args:
        points: (n, d) array (1-D sequences are read as n points in 1-D)
        domain: BoxDomain containing every point
    """

    def __init__(self, points, domain):
        self.domain = domain
        array = as_points(points, dim=domain.dim, name="design points")
        if not np.all(domain.contains(array)):
            raise InputError("design points must lie inside the domain")
        if array.shape[0] > 1:
            distances = cdist(array, array)
            np.fill_diagonal(distances, np.inf)
            if np.any(distances == 0.0):
                raise DegenerateDesignError("design points must be pairwise distinct")
        array.setflags(write=False)
        self._points = array

    @property
    def points(self):
        return self._points

    @property
    def size(self):
        return self._points.shape[0]

    @property
    def dim(self):
        return self.domain.dim

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"Design(n={self.size}, dim={self.dim})"

    @classmethod
    def from_points(cls, points, domain=None):
        """Validated design; without a domain, the bounding box of the points is used"""
        array = as_points(points, name="design points")
        if domain is None:
            lower, upper = array.min(axis=0), array.max(axis=0)
            # degenerate extents get a unit-width box
            flat = upper <= lower
            upper = np.where(flat, lower + 1.0, upper)
            domain = BoxDomain(tuple(lower), tuple(upper))
        return cls(array, domain)

    def with_domain(self, domain):
        return Design(self._points, domain)

    def add_point(self, point):
        """New design with one extra point appended"""
        extra = as_points(np.atleast_1d(point), dim=self.dim).reshape(1, -1)
        return Design(np.vstack([self._points, extra]), self.domain)

    def to_list(self):
        return self._points.tolist()


def equispaced(domain, n):
    """Equally spaced 1-D design including both endpoints

    Args:
        domain: 1-D BoxDomain
        n: Number of points (at least 2)

    Returns:
        Design: x_j = lower + (j - 1) * (upper - lower) / (n - 1)
    """
    if domain.dim != 1:
        raise InputError("equispaced designs are one-dimensional")
    if int(n) != n or n < 2:
        raise InputError(f"equispaced design needs n >= 2, got {n}")
    n = int(n)
    lower, upper = domain.lower[0], domain.upper[0]
    step = (upper - lower) / (n - 1)
    points = lower + step * np.arange(n)
    # pin the right endpoint exactly
    points[-1] = upper
    return Design(points.reshape(-1, 1), domain)


def halton(domain, n, skip=0):
    """Deterministic Halton design with bases the first d primes

    The unscrambled sequence starts at the origin; that point is always
    dropped, so skip=0 yields 1/2, 1/4, 3/4, ... in base 2.
    """
    if int(n) != n or n < 1:
        raise InputError(f"halton design needs n >= 1, got {n}")
    if int(skip) != skip or skip < 0:
        raise InputError(f"halton skip must be a nonnegative integer, got {skip}")
    sampler = qmc.Halton(d=domain.dim, scramble=False)
    sampler.fast_forward(1 + int(skip))
    unit = sampler.random(int(n))
    return Design(domain.from_unit(unit), domain)


def tensor_grid(domain, resolution):
    """Tensor grid with `resolution` equispaced points per dimension"""
    if int(resolution) != resolution or resolution < 2:
        raise InputError(f"grid resolution must be >= 2, got {resolution}")
    axes = [np.linspace(lo, hi, int(resolution)) for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([axis.ravel() for axis in mesh])


def fill_distance(design, resolution=None):
    """Grid approximation of h(D) = max_x min_i |x - x_i|

    Args:
        design: Nonempty Design
        resolution: Grid points per dimension (defaults: 1001 in 1-D, 101 otherwise)

    Returns:
        float: Lower bound on the true fill distance, exact on the grid
    """
    if design.size == 0:
        raise InputError("fill distance of an empty design is undefined")
    if resolution is None:
        resolution = settings.default_fill_resolution(design.dim)
    grid = tensor_grid(design.domain, resolution)
    best = 0.0
    for start in range(0, grid.shape[0], _FILL_CHUNK):
        block = cdist(grid[start:start + _FILL_CHUNK], design.points)
        best = max(best, float(block.min(axis=1).max()))
    logger.debug("fill distance of %r on %d-point grid: %.6g", design, grid.shape[0], best)
    return best
