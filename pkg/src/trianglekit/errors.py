"""Exception hierarchy shared by all trianglekit modules."""


class TriangleKitError(Exception):
    """Base class for all trianglekit errors."""


class ValidationError(TriangleKitError, ValueError):
    """Raised when inputs violate a documented precondition or invariant."""


class ComputationError(TriangleKitError, RuntimeError):
    """Raised when a computation fails despite valid inputs."""


class EstimationError(ComputationError):
    """Raised when an estimator cannot produce a meaningful result.

    Carries a human-readable diagnostic, e.g. too few points inside a fit
    window or a nonpositive fitted slope.
    """


class CounterexampleAlarm(UserWarning):
    """A heuristic local maximum exceeded its conjectured classical bound.

    This is never clipped or silenced internally: it either signals a bug in
    the optimizer or a genuine counterexample to the conjectured bound, and
    both deserve a loud report.
    """
