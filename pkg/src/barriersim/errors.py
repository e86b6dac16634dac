"""Exception types shared across the package."""


class BarrierSimError(Exception):
    """Base class for all package errors."""


class SteeringSingularity(BarrierSimError):
    """Front-wheel angle reached the tan() singularity guard band."""


class ConstraintViolated(BarrierSimError):
    """A barrier was evaluated on a nonpositive constraint margin.

    Raising this means the configuration is already outside the feasible
    set the barrier is supposed to protect.
    """

    def __init__(self, constraint: str, margin: float):
        self.constraint = constraint
        self.margin = margin
        super().__init__(f"{constraint} violated (margin {margin:.6g})")


class ZeroGradient(BarrierSimError):
    """Barrier gradient too small to define a heading; caller holds the previous one."""


class ParseError(BarrierSimError):
    """Scenario document is malformed; message carries the location."""


class ValidationError(BarrierSimError):
    """Scenario parsed but violates a named invariant."""
