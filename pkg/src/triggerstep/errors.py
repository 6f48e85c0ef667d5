"""Exception types shared across the package."""


class InvalidObjectiveError(ValueError):
    """Raised when an objective oracle cannot be constructed from the inputs."""


class NumericError(RuntimeError):
    """Raised when an iterative numeric procedure fails to converge or overflows."""


class TriggerInfeasibleError(RuntimeError):
    """Raised when a trigger bound is nonnegative at t = 0, so no positive step exists.

    The caller is expected to shrink the displacement parameter and retry.
    """
