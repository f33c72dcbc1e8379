"""
Calibration problem types for the Calibration Toolkit
Simulators (cheap and expensive), problems and results
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np

from calibkit import settings
from calibkit.core.design import BoxDomain, Design
from calibkit.core.interpolate import fit, predict_many
from calibkit.core.kernels import KernelSpec, as_point, as_points
from calibkit.core.numerics import CandidateSet
from calibkit.errors import EvaluationError, InputError

logger = logging.getLogger(__name__)


class CalibrationMethod(Enum):
    KO = "ko"
    PROFILE_KO = "profile_ko"
    MODIFIED_KO = "modified_ko"
    L2 = "l2"
    OLS = "ols"
    L2_PROJECTION = "l2_projection"


class SimulatorKind(Enum):
    CHEAP = "cheap"
    EXPENSIVE = "expensive"


def _checked_values(values, count, what):
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != count:
        raise EvaluationError(f"{what} returned {values.shape[0]} values for {count} points")
    bad = ~np.isfinite(values)
    if np.any(bad):
        raise EvaluationError(f"{what} returned a non-finite value at row {int(np.argmax(bad))}")
    return values


@dataclass(frozen=True, eq=False)
class CheapSimulator:
    """Simulator that can be run at will

    evaluator(points, theta) takes an (N, d) array of control inputs and a
    parameter vector and returns N outputs.
    """

    evaluator: Callable
    name: str = "cheap"

    kind = SimulatorKind.CHEAP

    def evaluate(self, points, theta):
        points = as_points(points)
        return _checked_values(self.evaluator(points, np.asarray(theta, dtype=float)),
                               points.shape[0], f"simulator {self.name!r}")


@dataclass(frozen=True, eq=False)
class ExpensiveSimulator:
    """Simulator known only on a design G over Omega x Theta

    The surrogate is a kernel interpolant with kernel psi on the concatenated
    (x, theta) coordinates, fitted once on first use.
    """

    design: Design
    values: np.ndarray
    kernel: KernelSpec
    nugget: settings.NuggetPolicy = settings.DEFAULT_NUGGET
    name: str = "expensive"

    kind = SimulatorKind.EXPENSIVE

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if values.shape[0] != self.design.size:
            raise InputError(f"got {values.shape[0]} simulator outputs for {self.design.size} runs")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_interpolator(cls, interp, name="expensive"):
        """Wrap a surrogate that was fitted (and saved) earlier"""
        simulator = cls(interp.design, interp.values, interp.kernel,
                        settings.NuggetPolicy.pinned(interp.nugget_used), name)
        simulator.__dict__["surrogate"] = interp
        return simulator

    @cached_property
    def surrogate(self):
        interp = fit(self.design, self.values, self.kernel, self.nugget)
        logger.info("fitted simulator surrogate on %d runs (%s, nugget %.1e)",
                    self.design.size, self.kernel, interp.nugget_used)
        return interp

    def evaluate(self, points, theta):
        points = as_points(points)
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        joined = np.hstack([points, np.tile(theta, (points.shape[0], 1))])
        return predict_many(self.surrogate, joined)


@dataclass(frozen=True, eq=False)
class CalibrationProblem:
    """Physical data, a simulator and the parameter search region

    Args:
        domain: Control-variable box Omega
        theta_region: BoxDomain or CandidateSet
        physical_design: Design D inside Omega
        physical_values: y^p(D)
        simulator: CheapSimulator or ExpensiveSimulator
        physical_evaluator: Exact y^p for oracle computations (synthetic problems)
        name: Label used in logs and reports
    """

    domain: BoxDomain
    theta_region: Union[BoxDomain, CandidateSet]
    physical_design: Design
    physical_values: np.ndarray
    simulator: Union[CheapSimulator, ExpensiveSimulator]
    physical_evaluator: Optional[Callable] = None
    name: str = "problem"

    def __post_init__(self):
        if self.physical_design.dim != self.domain.dim:
            raise InputError("physical design and domain dimensions differ")
        values = np.asarray(self.physical_values, dtype=float).reshape(-1)
        if values.shape[0] != self.physical_design.size:
            raise InputError(
                f"got {values.shape[0]} physical responses for {self.physical_design.size} design points"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("physical responses must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "physical_values", values)
        if not isinstance(self.theta_region, (BoxDomain, CandidateSet)):
            raise InputError("theta region must be a BoxDomain or a CandidateSet")
        if self.is_expensive:
            expected = self.domain.dim + self.theta_dim
            if self.simulator.design.dim != expected:
                raise InputError(f"simulator design has dimension {self.simulator.design.dim}, expected {expected}")

    @property
    def theta_dim(self):
        return self.theta_region.dim

    @property
    def is_expensive(self):
        return self.simulator.kind is SimulatorKind.EXPENSIVE

    @property
    def is_finite(self):
        return isinstance(self.theta_region, CandidateSet)

    @property
    def size(self):
        return self.physical_design.size

    def simulate(self, points, theta):
        """y^s(points, theta) (or the surrogate for expensive simulators)"""
        return self.simulator.evaluate(points, as_point(theta, dim=self.theta_dim, name="theta"))

    def residuals(self, theta):
        """epsilon(x_i, theta) = y^p(x_i) - y^s(x_i, theta) on the physical design"""
        return self.physical_values - self.simulate(self.physical_design.points, theta)

    def physical(self, points):
        if self.physical_evaluator is None:
            raise InputError(f"problem {self.name!r} has no exact physical evaluator")
        points = as_points(points, dim=self.domain.dim)
        return _checked_values(self.physical_evaluator(points), points.shape[0], "physical evaluator")

    def with_physical_data(self, design, values):
        """Same problem on another physical design"""
        return CalibrationProblem(self.domain, self.theta_region, design, values, self.simulator,
                                  self.physical_evaluator, self.name)

    def locate(self, theta):
        """Index and label of theta in a finite region (None for boxes)"""
        if not self.is_finite:
            return None, None
        matches = np.flatnonzero(np.all(self.theta_region.points == np.asarray(theta), axis=1))
        if matches.size == 0:
            return None, None
        index = int(matches[0])
        return index, self.theta_region.labels[index]


@dataclass
class CalibrationResult:
    """Outcome of a calibration method

    objective_value is the minimized objective (PSS, L2 distance or sum of
    squares), except for profile KO where it is the maximized profile
    log-likelihood.
    """

    method: CalibrationMethod
    theta_hat: np.ndarray
    objective_value: float
    candidate_index: Optional[int] = None
    candidate_label: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        data = {
            "method": self.method.value,
            "theta_hat": np.asarray(self.theta_hat, dtype=float).tolist(),
            "objective_value": float(self.objective_value),
            "diagnostics": self.diagnostics,
        }
        if self.candidate_label is not None:
            data["candidate"] = self.candidate_label
            data["candidate_index"] = self.candidate_index
        return data

    def summary_row(self):
        """Flat row for the human-readable results table"""
        row = {"method": self.method.value}
        for i, value in enumerate(np.atleast_1d(self.theta_hat)):
            row[f"theta{i + 1}"] = float(value)
        row["candidate"] = self.candidate_label or ""
        row["objective"] = float(self.objective_value)
        row["nugget"] = self.diagnostics.get("nugget_used", 0.0)
        return row
