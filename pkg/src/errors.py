"""Exceptions raised by the dyadic weights lab.

Input-shaped failures subclass ValueError so callers that only know about
ValueError keep working; the CLI maps the hierarchy onto exit codes.
"""


class DyadicLabError(Exception):
    """Base class for every error raised by this package."""


class InvariantViolation(DyadicLabError, ValueError):
    """A constructed object would break one of its structural invariants."""


class SplitOutOfRange(InvariantViolation):
    """A mass-split fraction left (eps_floor, 1 - eps_floor)."""

    def __init__(self, index, value: float, eps_floor: float):
        self.index = index
        self.value = value
        self.eps_floor = eps_floor
        super().__init__(
            f"Split at node (level={index.level}, pos={index.position}) is {value!r}; "
            f"must lie in ({eps_floor}, {1 - eps_floor})"
        )


class ParaexponentialBoundError(InvariantViolation):
    """sup |b_I| |I|^{-1/2} exceeds 1 - eps."""


class NotNested(DyadicLabError, ValueError):
    """The inner interval is not contained in the outer one."""


class OutOfRange(DyadicLabError, ValueError):
    """A parameter is outside the range an operation is defined on."""


class SizeLimit(DyadicLabError, ValueError):
    """An exhaustive computation would exceed its configured size cap."""


class DivergentSeries(DyadicLabError, ArithmeticError):
    """The reverse Hölder series of a periodic weight does not converge."""


class BisectionFailed(DyadicLabError, ArithmeticError):
    """A bracketing root search did not reach the residual tolerance."""


class VerificationFailed(DyadicLabError):
    """An internally produced certificate or table failed its own checks."""
