"""Exception types used across the package."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NonconvergenceError(RuntimeError):
    """A fit required by a statistical procedure did not converge.

    Carries the convergence status labels of the offending fits so callers
    can report why the procedure could not be completed.
    """

    def __init__(self, message, statuses=()):
        super().__init__(message)
        self.statuses = tuple(statuses)


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates were discarded to trust the p-value."""
