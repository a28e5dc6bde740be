"""Exception hierarchy shared by every module.

The CLI maps these to exit codes: parameter and planning errors give 3,
numeric and consistency errors give 4.
"""


class LabError(Exception):
    """Base class for all errors raised by marginlab."""


class ParameterError(LabError, ValueError):
    """Invalid input: wrong dimension, out-of-range parameter, bad index."""


class PlanningError(LabError):
    """A parameter schedule cannot satisfy its feasibility constraint."""


class NumericError(LabError, ArithmeticError):
    """Quadrature failure, non-finite values, runaway rejection loops."""


class ConsistencyError(LabError):
    """A computed value contradicts an analytic certificate (signals a bug)."""
