"""
Shared numerics for the Calibration Toolkit
Gauss-Legendre tensor quadrature, L2 norms and the derivative-free box minimizer

Functions handed to this module are vectorized: they take an (N, d) array of
points and return N values.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import Bounds, minimize

from calibkit import settings
from calibkit.core.design import BoxDomain, halton
from calibkit.core.kernels import as_points
from calibkit.errors import EvaluationError, InputError, OptimizationError

logger = logging.getLogger(__name__)


def parallel_map(func, items, threads=None):
    """Ordered map over items, threaded when CALIBKIT_THREADS allows it"""
    items = list(items)
    if threads is None:
        threads = settings.thread_count()
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(func, items))


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor-product Gauss-Legendre rule on a box"""

    domain: BoxDomain
    order: int = None

    def __post_init__(self):
        order = self.order
        if order is None:
            order = settings.default_quad_order(self.domain.dim)
        if int(order) != order or order < 1:
            raise InputError(f"quadrature order must be a positive integer, got {order}")
        object.__setattr__(self, "order", int(order))

    @cached_property
    def _rule(self):
        base_nodes, base_weights = leggauss(self.order)
        axes, axis_weights = [], []
        for lo, hi in zip(self.domain.lower, self.domain.upper):
            half = 0.5 * (hi - lo)
            axes.append(lo + half * (base_nodes + 1.0))
            axis_weights.append(half * base_weights)
        node_mesh = np.meshgrid(*axes, indexing="ij")
        weight_mesh = np.meshgrid(*axis_weights, indexing="ij")
        nodes = np.column_stack([mesh.ravel() for mesh in node_mesh])
        weights = np.prod(np.column_stack([mesh.ravel() for mesh in weight_mesh]), axis=1)
        nodes.setflags(write=False)
        weights.setflags(write=False)
        return nodes, weights

    @property
    def nodes(self):
        return self._rule[0]

    @property
    def weights(self):
        return self._rule[1]

    @property
    def size(self):
        return self.weights.shape[0]


def evaluate_on_nodes(f, quad):
    """Evaluate a vectorized function on the quadrature nodes

    Raises:
        EvaluationError: Some value is not finite (the first such node is reported)
    """
    values = np.asarray(f(quad.nodes), dtype=float).reshape(-1)
    if values.shape[0] != quad.size:
        raise EvaluationError(f"function returned {values.shape[0]} values for {quad.size} nodes")
    bad = ~np.isfinite(values)
    if np.any(bad):
        node = quad.nodes[int(np.argmax(bad))]
        raise EvaluationError(f"non-finite function value at node {node.tolist()}", node=node)
    return values


def l2_norm_values(values, quad):
    """sqrt(sum w_i v_i**2) for values already sampled on the nodes"""
    return float(np.sqrt(np.dot(quad.weights, np.square(values))))


def l2_norm(f, quad):
    """L2(Omega) norm of f by quadrature"""
    return l2_norm_values(evaluate_on_nodes(f, quad), quad)


def l2_inner(f, g, quad):
    """L2(Omega) inner product of two functions by quadrature"""
    return float(np.dot(quad.weights, evaluate_on_nodes(f, quad) * evaluate_on_nodes(g, quad)))


@dataclass(frozen=True, eq=False)
class CandidateSet:
    """Finite list of distinct candidate parameter vectors"""

    points: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        points = as_points(self.points, name="candidates")
        if points.shape[0] == 0:
            raise InputError("candidate list is empty")
        if np.unique(points, axis=0).shape[0] != points.shape[0]:
            raise InputError("candidates must be distinct")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        labels = self.labels
        if labels is None:
            labels = tuple(str(i + 1) for i in range(points.shape[0]))
        if len(labels) != points.shape[0]:
            raise InputError("need one label per candidate")
        object.__setattr__(self, "labels", tuple(labels))

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass
class OptimizationOutcome:
    """Result of minimize_box

    index is the candidate position for finite regions and None for boxes;
    trace holds one summary dictionary per candidate or per start.
    """

    argmin: np.ndarray
    value: float
    trace: list = field(default_factory=list)
    index: int = None
    tie: bool = False
    converged: bool = True

    def summary(self):
        return {
            "evaluations": len(self.trace),
            "converged": self.converged,
            "tie": self.tie,
        }


def _tied(values, best, rtol=settings.TIE_RTOL):
    return np.abs(values - best) <= rtol * abs(best)


def _minimize_candidates(objective, region, threads):
    values = np.array(parallel_map(lambda theta: float(objective(theta)), region.points, threads))
    values = np.where(np.isfinite(values), values, np.inf)
    if not np.any(np.isfinite(values)):
        raise OptimizationError("objective is not finite at any candidate")
    best = values.min()
    tied = np.flatnonzero(_tied(values, best))
    index = int(tied[0])
    trace = [
        {"candidate": region.labels[i], "theta": region.points[i].tolist(), "value": float(values[i])}
        for i in range(len(region))
    ]
    if tied.size > 1:
        logger.warning("candidates %s tie at objective %.6g; keeping %s",
                       [region.labels[i] for i in tied], best, region.labels[index])
    return OptimizationOutcome(region.points[index].copy(), float(values[index]), trace,
                               index=index, tie=bool(tied.size > 1))


def _initial_simplex(x0, region, scale):
    lower, upper = region.lower_array, region.upper_array
    steps = scale * region.widths
    simplex = [x0]
    for i in range(x0.shape[0]):
        vertex = x0.copy()
        vertex[i] = x0[i] + steps[i] if x0[i] + steps[i] <= upper[i] else x0[i] - steps[i]
        vertex[i] = min(max(vertex[i], lower[i]), upper[i])
        simplex.append(vertex)
    return np.array(simplex)


def _minimize_box(objective, region, options, threads):
    starts = halton(region, options.starts).points
    bounds = Bounds(region.lower_array, region.upper_array)

    def safe(theta):
        value = float(objective(np.asarray(theta, dtype=float)))
        return value if np.isfinite(value) else np.inf

    def run(start):
        x0 = np.array(start, dtype=float)
        result = minimize(
            safe, x0, method="Nelder-Mead", bounds=bounds,
            options={
                "maxiter": options.maxiter,
                "xatol": options.xatol,
                "fatol": options.fatol,
                "initial_simplex": _initial_simplex(x0, region, options.simplex_scale),
            },
        )
        x = np.clip(np.asarray(result.x, dtype=float), region.lower_array, region.upper_array)
        return {
            "start": x0.tolist(),
            "theta": x.tolist(),
            "value": float(result.fun),
            "iterations": int(result.nit),
            "evaluations": int(result.nfev),
            "converged": bool(result.success),
        }

    trace = parallel_map(run, starts, threads)
    values = np.array([entry["value"] for entry in trace])
    if not np.any(np.isfinite(values)):
        raise OptimizationError("no optimizer start produced a finite objective value")
    best = values.min()
    tied = np.flatnonzero(_tied(values, best))
    # lexicographically smallest among the tied end points
    candidates = sorted(tied, key=lambda i: tuple(trace[i]["theta"]))
    chosen = trace[candidates[0]]
    spread = np.ptp(np.array([trace[i]["theta"] for i in tied]), axis=0) if tied.size > 1 else 0.0
    tie = bool(np.any(np.asarray(spread) > 1e-6 * region.widths))
    if tie:
        logger.warning("distinct optimizer end points tie at objective %.6g", best)
    converged = bool(chosen["converged"])
    if not converged:
        logger.warning("Nelder-Mead did not converge from the best start; returning best iterate")
    return OptimizationOutcome(np.array(chosen["theta"]), float(chosen["value"]), trace,
                               tie=tie, converged=converged)


def minimize_box(objective, region, options=None, threads=None):
    """Minimize a black-box objective over a box or a finite candidate list

    Args:
        objective: Callable mapping a parameter vector to a real value
        region: BoxDomain (multistart Nelder-Mead from Halton starts) or
            CandidateSet (exhaustive evaluation)
        options: OptimizerSettings for box regions
        threads: Worker cap (defaults to CALIBKIT_THREADS)

    Returns:
        OptimizationOutcome: Best point, its value and per-start/candidate trace
    """
    options = options or settings.DEFAULT_OPTIMIZER
    if isinstance(region, CandidateSet):
        return _minimize_candidates(objective, region, threads)
    if isinstance(region, BoxDomain):
        return _minimize_box(objective, region, options, threads)
    raise InputError(f"unsupported search region {type(region).__name__}")
