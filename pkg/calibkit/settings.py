"""
Configuration defaults for the Calibration Toolkit
Holds numerical defaults, the nugget/optimizer/schedule records and flag parsers
"""

import logging
import os
from dataclasses import asdict, dataclass

import numpy as np

from calibkit.errors import InputError

logger = logging.getLogger(__name__)

THREADS_ENV = "CALIBKIT_THREADS"

# Quadrature orders per dimension
QUAD_ORDER_1D = 64
QUAD_ORDER_2D = 16
EIGEN_QUAD_ORDER = 128
EIGEN_QUAD_ORDER_2D = 32

# Fill distance grid resolution per dimension
FILL_RESOLUTION_1D = 1001
FILL_RESOLUTION_2D = 101

# Profile likelihood phi grid over [1, 6]
PHI_GRID_DEFAULT = "1:6:51"

KL_TRUNCATION = 5

# Relative tolerance for declaring two objective values tied
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class NuggetPolicy:
    """How a Gram matrix is regularized when Cholesky breaks down

    kind is "none" (fail immediately) or "adaptive" (retry with
    start * factor**k until the factorization succeeds or max is exceeded).
    """

    kind: str = "adaptive"
    start: float = 1e-12
    factor: float = 10.0
    max: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("none", "adaptive"):
            raise InputError(f"unknown nugget policy {self.kind!r}")
        if self.kind == "adaptive":
            if not (self.start > 0 and self.factor > 1 and self.max >= self.start):
                raise InputError("adaptive nugget needs start > 0, factor > 1, max >= start")

    def candidates(self):
        """Nugget values to try, in order (always starting with zero)"""
        values = [0.0]
        if self.kind == "adaptive":
            nugget = self.start
            while nugget <= self.max * (1 + 1e-12):
                values.append(nugget)
                nugget *= self.factor
        return values

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        kind = data.pop("policy", data.pop("kind", "adaptive"))
        return cls(kind=kind, **{key: float(value) for key, value in data.items()})

    @classmethod
    def pinned(cls, nugget):
        """Policy that reproduces a factorization done at a known nugget"""
        if nugget == 0:
            return cls(kind="none")
        return cls("adaptive", start=nugget, factor=10.0, max=nugget)

    def to_dict(self):
        return asdict(self)


NO_NUGGET = NuggetPolicy(kind="none")
DEFAULT_NUGGET = NuggetPolicy()


@dataclass(frozen=True)
class OptimizerSettings:
    """Deterministic multistart Nelder-Mead settings for continuous regions"""

    starts: int = 16
    maxiter: int = 200
    fatol: float = 1e-8
    xatol: float = 1e-10
    # initial simplex edge as a fraction of the box width
    simplex_scale: float = 0.05

    def __post_init__(self):
        if self.starts < 1 or self.maxiter < 1:
            raise InputError("optimizer needs at least one start and one iteration")

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        kwargs = {}
        for key in ("starts", "maxiter"):
            if key in data:
                kwargs[key] = int(data[key])
        for key in ("fatol", "xatol", "simplex_scale"):
            if key in data:
                kwargs[key] = float(data[key])
        return cls(**kwargs)

    def to_dict(self):
        return asdict(self)


DEFAULT_OPTIMIZER = OptimizerSettings()


@dataclass(frozen=True)
class Schedule:
    """Scale schedule phi = c * h**(-gamma) for the modified KO calibrator"""

    c: float = 1.0
    gamma: float = 0.5

    def __post_init__(self):
        if not self.c > 0:
            raise InputError("schedule constant c must be positive")
        # gamma = 0 is the degenerate fixed-phi schedule
        if not 0 <= self.gamma < 1:
            raise InputError("schedule exponent gamma must lie in [0, 1)")

    def phi(self, fill_distance):
        if not fill_distance > 0:
            raise InputError("fill distance must be positive")
        return self.c * fill_distance ** (-self.gamma)

    def to_dict(self):
        return asdict(self)


DEFAULT_SCHEDULE = Schedule()


def default_quad_order(dim):
    """Default Gauss-Legendre order per dimension for a domain of this dimension"""
    return QUAD_ORDER_1D if dim == 1 else QUAD_ORDER_2D


def default_fill_resolution(dim):
    return FILL_RESOLUTION_1D if dim == 1 else FILL_RESOLUTION_2D


def thread_count():
    """Worker cap from CALIBKIT_THREADS (1 when unset or invalid)"""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1
    if value < 1:
        logger.warning("ignoring non-positive %s=%r", THREADS_ENV, raw)
        return 1
    return value


def parse_phi_grid(text):
    """Parse "a:b:steps" into an increasing array of positive phi values"""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise InputError(f"phi grid must look like a:b:steps, got {text!r}")
    try:
        start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad phi grid {text!r}: {exc}") from exc
    if steps < 1 or start <= 0 or stop < start:
        raise InputError(f"phi grid needs 0 < a <= b and steps >= 1, got {text!r}")
    if steps == 1:
        return np.array([start])
    return np.linspace(start, stop, steps)


def parse_sizes(text, minimum=1):
    """Parse a comma separated list of strictly increasing design sizes"""
    try:
        sizes = [int(item) for item in str(text).split(",") if item.strip()]
    except ValueError as exc:
        raise InputError(f"bad size list {text!r}: {exc}") from exc
    if len(sizes) < minimum:
        raise InputError(f"need at least {minimum} sizes, got {len(sizes)}")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputError(f"design sizes must be strictly increasing, got {sizes}")
    return sizes
