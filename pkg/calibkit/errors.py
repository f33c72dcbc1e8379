"""
Exception hierarchy for the Calibration Toolkit
Every error carries the CLI exit code it maps to
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class CalibkitError(Exception):
    """Base class for all toolkit errors"""

    exit_code = EXIT_NUMERICAL


class InputError(CalibkitError, ValueError):
    """Invalid argument: wrong dimension, non-finite coordinate, bad count"""

    exit_code = EXIT_USAGE


class DegenerateDesignError(InputError):
    """Design contains duplicate points"""


class DataError(CalibkitError):
    """Manifest, CSV or filesystem problem"""

    exit_code = EXIT_DATA


class NumericalError(CalibkitError):
    """Base class for numerical failures"""

    exit_code = EXIT_NUMERICAL


class IllConditionedGramError(NumericalError):
    """Cholesky factorization of a Gram matrix failed

    Args:
        message: Human readable summary
        diagnostics: Dictionary describing the matrix that failed
            (size, attempted nuggets, smallest diagonal, condition estimate)
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in sorted(self.diagnostics.items()))
        return f"{base} ({details})"


class UndefinedLikelihoodError(NumericalError):
    """Profile log-likelihood requested for an all-zero response"""


class RankDeficiencyError(NumericalError):
    """A retained eigenvalue of the integral operator is not positive"""


class EvaluationError(NumericalError):
    """A function returned a non-finite value at a quadrature node

    Args:
        message: Human readable summary
        node: The offending node
    """

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class OptimizationError(NumericalError):
    """No optimizer start produced a finite objective value"""
