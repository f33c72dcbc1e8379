"""
Synthetic calibration problems for the Calibration Toolkit
Problems with a known L2 projection, used by rate sweeps and consistency checks

The evaluator functions are module level so manifests can reference them as
"calibkit.experiments.synthetic:<name>".
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from calibkit.calibration.problem import CalibrationProblem, CheapSimulator, ExpensiveSimulator
from calibkit.core.design import BoxDomain, Design, equispaced, halton, tensor_grid
from calibkit.core.kernels import KernelSpec
from calibkit.errors import InputError

BUMP_SCALE = 20.0
DECAY_RATE = 1.5
DECAY_SCALE = 10.0


def exp_taylor_physical(points):
    return np.exp(points[:, 0])


def exp_taylor_simulator(points, theta):
    """Second-order Taylor model 1 + theta x + x^2/2 of the exponential"""
    x = points[:, 0]
    return 1.0 + theta[0] * x + 0.5 * x ** 2


def linear_physical(points):
    return points[:, 0]


def linear_simulator(points, theta):
    return theta[0] * points[:, 0]


def bump_physical(points):
    return 0.5 * np.exp(-BUMP_SCALE * (points[:, 0] - 0.5) ** 2)


def bump_simulator(points, theta):
    """Gaussian bump whose height decays as theta moves away from 1"""
    return np.exp(-BUMP_SCALE * ((points[:, 0] - 0.5) ** 2 + (theta[0] - 1.0) ** 2))


def physical_design(domain, n, kind="equispaced", skip=0):
    """Physical design of size n by name (equispaced or halton)"""
    if kind == "equispaced":
        return equispaced(domain, n)
    if kind == "halton":
        return halton(domain, n, skip)
    raise InputError(f"unknown design kind {kind!r}; use equispaced or halton")


def _cheap_problem(name, domain, theta_region, n, physical, simulator, design_kind):
    design = physical_design(domain, n, design_kind)
    return CalibrationProblem(
        domain=domain,
        theta_region=theta_region,
        physical_design=design,
        physical_values=physical(design.points),
        simulator=CheapSimulator(simulator, name),
        physical_evaluator=physical,
        name=name,
    )


def exp_taylor_problem(n, design_kind="equispaced"):
    """y^p = e^x against 1 + theta x + x^2/2 on [0, 1]; theta* = 9/8"""
    return _cheap_problem("exp-taylor", BoxDomain.interval(0.0, 1.0), BoxDomain.interval(0.0, 3.0), n,
                          exp_taylor_physical, exp_taylor_simulator, design_kind)


def linear_problem(n, design_kind="equispaced"):
    """y^p = x against theta x on [-1, 1]; theta* = 1 with an exact match"""
    return _cheap_problem("linear", BoxDomain.interval(-1.0, 1.0), BoxDomain.interval(0.0, 2.0), n,
                          linear_physical, linear_simulator, design_kind)


def simulator_runs_grid(grid=5):
    """Tensor grid G over [0, 1] x [1, 2] for the tabulated (expensive) simulators"""
    domain = BoxDomain((0.0, 1.0), (1.0, 2.0))
    return Design(tensor_grid(domain, grid), domain)


def bump_problem(n=21, expensive=False, grid=5, design_kind="equispaced"):
    """Bump problem on [0, 1] with Theta = [1, 2]

    The simulator at theta matches half the physical bump exactly where
    exp(-20 (theta - 1)^2) = 1/2. The expensive variant tabulates the simulator
    on a grid G whose Gaussian (phi=20) interpolant reproduces it everywhere.
    """
    problem = _cheap_problem("bump", BoxDomain.interval(0.0, 1.0), BoxDomain.interval(1.0, 2.0), n,
                             bump_physical, bump_simulator, design_kind)
    if not expensive:
        return problem
    runs = simulator_runs_grid(grid)
    simulator = ExpensiveSimulator(
        design=runs,
        values=_bump_on_runs(runs.points),
        kernel=KernelSpec.gaussian(BUMP_SCALE),
        name="bump-runs",
    )
    return CalibrationProblem(problem.domain, problem.theta_region, problem.physical_design,
                              problem.physical_values, simulator, problem.physical_evaluator,
                              "bump-expensive")


def _bump_on_runs(points):
    return np.exp(-BUMP_SCALE * ((points[:, 0] - 0.5) ** 2 + (points[:, 1] - 1.0) ** 2))


def decay_physical(points):
    return np.exp(-DECAY_RATE * points[:, 0])


def decay_simulator(points, theta):
    """Exponential decay exp(-theta x)"""
    return np.exp(-theta[0] * points[:, 0])


def decay_problem(n=11, expensive=False, grid=9, design_kind="equispaced"):
    """y^p = exp(-1.5 x) against exp(-theta x) on [0, 1], Theta = [1, 2]; theta* = 1.5

    The expensive variant tabulates the simulator on a grid x grid tensor grid
    and fits a Gaussian (phi=10) surrogate. The decay is not in the span of
    kernel translates, so the surrogate is only as good as the grid is dense.
    """
    problem = _cheap_problem("decay", BoxDomain.interval(0.0, 1.0), BoxDomain.interval(1.0, 2.0), n,
                             decay_physical, decay_simulator, design_kind)
    if not expensive:
        return problem
    runs = simulator_runs_grid(grid)
    simulator = ExpensiveSimulator(
        design=runs,
        values=np.exp(-runs.points[:, 1] * runs.points[:, 0]),
        kernel=KernelSpec.gaussian(DECAY_SCALE),
        name=f"decay-runs-{grid}",
    )
    return CalibrationProblem(problem.domain, problem.theta_region, problem.physical_design,
                              problem.physical_values, simulator, problem.physical_evaluator,
                              "decay-expensive")


@dataclass(frozen=True)
class SyntheticProblem:
    """A named synthetic problem with its limit and default settings"""

    name: str
    builder: Callable
    theta_star: tuple
    kernel: KernelSpec
    quad_order: int = 128


SYNTHETIC = {
    "exp-taylor": SyntheticProblem("exp-taylor", exp_taylor_problem, (9.0 / 8.0,),
                                   KernelSpec.matern(2.5, 1.0)),
    "linear": SyntheticProblem("linear", linear_problem, (1.0,), KernelSpec.gaussian(1.0)),
    "bump": SyntheticProblem("bump", lambda n, design_kind="equispaced": bump_problem(n, design_kind=design_kind),
                             (1.0 + math.sqrt(math.log(2.0) / BUMP_SCALE),), KernelSpec.gaussian(BUMP_SCALE), 64),
    "decay": SyntheticProblem("decay", decay_problem, (DECAY_RATE,), KernelSpec.matern(2.5, 1.0)),
}


def get_synthetic(name):
    try:
        return SYNTHETIC[name]
    except KeyError:
        raise InputError(f"unknown synthetic problem {name!r}; choose from {', '.join(SYNTHETIC)}") from None
