"""Exception types shared by the solvers."""


class ShearbandError(Exception):
    """Base class for all solver errors."""


class ConfigError(ShearbandError):
    """Invalid run configuration (unknown keys, bad values)."""


class NonConvergence(ShearbandError):
    """An iterative solve stalled before reaching its tolerance.

    Carries the last residual so callers can report how close it got.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class StabilityRefused(ShearbandError):
    """Time step could not be reduced below the floor to stabilize a step."""


class ShapeViolation(ShearbandError):
    """Effective friction is not decreasing-then-increasing.

    The two-branch hull construction does not apply; ``interval`` holds the
    first scan interval on which the monotonicity pattern breaks.
    """

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class StickBranch(ShearbandError):
    """Fixed point sits in the stick regime where the dynamics is nonsmooth."""


class BracketFailure(ShearbandError):
    """A scalar root bracket could not be established."""
