"""
Problem manifests for the Calibration Toolkit
Loads a JSON manifest into a calibration problem plus its run settings

A manifest either names a built-in synthetic problem ("synthetic": "exp-taylor")
or describes one explicitly:

    domain      {"lower": [...], "upper": [...]}
    theta       {"lower": [...], "upper": [...]} or {"candidates": [[...]], "labels": [...]}
    physical    {"csv": "physical.csv"} or {"design": {"kind": "equispaced", "n": 11}},
                plus an optional exact "evaluator": "module:function"
    simulator   {"type": "cheap", "evaluator": "module:function"} or
                {"type": "expensive", "csv": "runs.csv", "kernel": {...}} or
                {"type": "expensive", "interpolator": "surrogate.json"} (saved by interp)
    kernel      {"family": "gaussian" | "matern", "phi": ..., "nu": ...}
    nugget, optimizer, quadrature, methods, rates   optional overrides

Relative paths are resolved against the manifest's directory.
"""

import hashlib
import importlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from calibkit import settings
from calibkit.calibration.problem import CalibrationProblem, CheapSimulator, ExpensiveSimulator
from calibkit.core.design import BoxDomain, Design
from calibkit.core.interpolate import Interpolator
from calibkit.core.kernels import KernelSpec
from calibkit.core.numerics import CandidateSet
from calibkit.errors import CalibkitError, DataError, InputError
from calibkit.experiments.synthetic import get_synthetic, physical_design
from calibkit.io.jsonio import load_json
from calibkit.io.tables import read_design, read_runs

logger = logging.getLogger(__name__)


def resolve_callable(spec):
    """Import "package.module:function" and return the function"""
    if not isinstance(spec, str) or ":" not in spec:
        raise DataError(f"callable must look like module:function, got {spec!r}")
    module_name, _, attribute = spec.partition(":")
    try:
        module = importlib.import_module(module_name)
        func = getattr(module, attribute)
    except (ImportError, AttributeError) as exc:
        raise DataError(f"cannot import {spec}: {exc}") from exc
    if not callable(func):
        raise DataError(f"{spec} is not callable")
    return func


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return digest.hexdigest()


def _section(data, key, required=True):
    value = data.get(key)
    if value is None:
        if required:
            raise DataError(f"manifest is missing '{key}'")
        return {}
    if not isinstance(value, dict):
        raise DataError(f"manifest section '{key}' must be an object")
    return value


def parse_theta_region(section):
    if "candidates" in section:
        points = np.asarray(section["candidates"], dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        labels = section.get("labels")
        return CandidateSet(points, tuple(str(label) for label in labels) if labels else None)
    return BoxDomain.from_dict(section)


def _region_box(region):
    if isinstance(region, BoxDomain):
        return region
    return Design.from_points(region.points).domain


@dataclass
class Manifest:
    """A loaded manifest: the problem plus settings for every method"""

    path: Path
    sha256: str
    data: dict
    problem: CalibrationProblem
    kernel: Optional[KernelSpec]
    nugget: settings.NuggetPolicy = settings.DEFAULT_NUGGET
    optimizer: settings.OptimizerSettings = settings.DEFAULT_OPTIMIZER
    quad_order: Optional[int] = None
    phi_grid: Optional[np.ndarray] = None
    schedule: settings.Schedule = settings.DEFAULT_SCHEDULE
    factory: Optional[Callable] = None
    reference: Optional[list] = None
    rates: dict = field(default_factory=dict)

    def problem_at(self, n):
        """The same problem on a physical design of size n (rate sweeps)"""
        if self.factory is None:
            raise InputError("rate sweeps need an exact physical evaluator and a generated design")
        return self.factory(int(n))


def _physical_from_section(section, domain, base):
    evaluator = resolve_callable(section["evaluator"]) if "evaluator" in section else None
    design_spec = section.get("design", {})
    kind = design_spec.get("kind", "equispaced")
    if "csv" in section:
        design, values = read_design(base / section["csv"], domain)
    elif evaluator is not None:
        design = physical_design(domain, int(design_spec.get("n", 11)), kind, int(design_spec.get("skip", 0)))
        values = evaluator(design.points)
    else:
        raise DataError("physical section needs a 'csv' file or an 'evaluator' with a design")

    factory_parts = None
    if evaluator is not None:
        factory_parts = (evaluator, kind, int(design_spec.get("skip", 0)))
    return design, values, evaluator, factory_parts


def _simulator_from_section(section, domain, region, base, nugget):
    kind = section.get("type", "cheap")
    if kind == "cheap":
        if "evaluator" not in section:
            raise DataError("cheap simulator needs an 'evaluator'")
        spec = section["evaluator"]
        return CheapSimulator(resolve_callable(spec), spec)
    if kind == "expensive":
        if "interpolator" in section:
            try:
                interp = Interpolator.from_dict(load_json(base / section["interpolator"]))
            except InputError as exc:
                raise DataError(f"bad saved surrogate {section['interpolator']}: {exc}") from exc
            if interp.dim != domain.dim + region.dim:
                raise DataError(f"saved surrogate has dimension {interp.dim}, "
                                f"expected {domain.dim + region.dim} (x then theta)")
            logger.info("reusing saved surrogate %s (%d runs)", section["interpolator"], interp.design.size)
            return ExpensiveSimulator.from_interpolator(interp, str(section["interpolator"]))
        if "csv" not in section or "kernel" not in section:
            raise DataError("expensive simulator needs 'csv' and 'kernel', or a saved 'interpolator'")
        runs_domain = domain.product(_region_box(region))
        runs, outputs = read_runs(base / section["csv"], runs_domain, domain.dim, region.dim)
        policy = settings.NuggetPolicy.from_dict(section["nugget"]) if "nugget" in section else nugget
        return ExpensiveSimulator(runs, outputs, KernelSpec.from_dict(section["kernel"]), policy,
                                  str(section["csv"]))
    raise DataError(f"unknown simulator type {kind!r}")


def _load_synthetic(data):
    spec = get_synthetic(data["synthetic"])
    design_spec = _section(data, "physical", required=False).get("design", {})
    kind = design_spec.get("kind", "equispaced")
    n = int(design_spec.get("n", 11))

    def factory(size):
        return spec.builder(size, design_kind=kind)

    return factory(n), spec.kernel, spec.quad_order, factory, list(spec.theta_star)


def load_manifest(path):
    """Load a JSON manifest

    Raises:
        DataError: Missing files, malformed sections or unimportable callables
        InputError: Values that violate the problem invariants
    """
    path = Path(path)
    data = load_json(path)
    if not isinstance(data, dict):
        raise DataError(f"manifest {path} must hold a JSON object")
    base = path.parent
    sha = file_sha256(path)

    nugget = settings.NuggetPolicy.from_dict(data["nugget"]) if "nugget" in data else settings.DEFAULT_NUGGET
    optimizer = settings.OptimizerSettings.from_dict(data.get("optimizer"))
    methods = _section(data, "methods", required=False)
    quad_order = _section(data, "quadrature", required=False).get("order")
    try:
        if "synthetic" in data:
            problem, kernel, default_order, factory, reference = _load_synthetic(data)
            quad_order = quad_order or default_order
        else:
            domain = BoxDomain.from_dict(_section(data, "domain"))
            region = parse_theta_region(_section(data, "theta"))
            design, values, evaluator, factory_parts = _physical_from_section(
                _section(data, "physical"), domain, base)
            simulator = _simulator_from_section(_section(data, "simulator"), domain, region, base, nugget)
            problem = CalibrationProblem(domain, region, design, values, simulator, evaluator,
                                         data.get("name", path.stem))
            kernel = None
            factory = None
            if factory_parts is not None:
                evaluator, kind, skip = factory_parts

                def factory(n):
                    new_design = physical_design(domain, n, kind, skip)
                    return problem.with_physical_data(new_design, evaluator(new_design.points))
            reference = None
        if "kernel" in data:
            kernel = KernelSpec.from_dict(data["kernel"])
        profile = methods.get("profile_ko", {})
        phi_grid = settings.parse_phi_grid(profile["phi_grid"]) if "phi_grid" in profile else None
        schedule_spec = methods.get("modified_ko", {})
        schedule = settings.Schedule(float(schedule_spec.get("c", 1.0)), float(schedule_spec.get("gamma", 0.5)))
    except CalibkitError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed manifest {path}: {exc}") from exc

    rates = _section(data, "rates", required=False)
    if "reference" in rates:
        reference = list(np.atleast_1d(np.asarray(rates["reference"], dtype=float)))
    logger.info("loaded manifest %s (sha256 %s)", path, sha[:12])
    return Manifest(path, sha, data, problem, kernel, nugget, optimizer,
                    int(quad_order) if quad_order else None, phi_grid, schedule, factory, reference, rates)
