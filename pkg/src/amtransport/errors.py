"""Exception types raised by the simulator."""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


class PhysicsError(ValueError):
    """A physical precondition of a model or operation is violated."""


class FitError(PhysicsError):
    """The exponential tunneling law does not describe J(V) well enough."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge."""


class SolverError(RuntimeError):
    """A numerical solver did not deliver a trustworthy answer."""


class IntegrationError(SolverError):
    """The time integrator failed (step underflow, tolerance failure)."""


class DegenerateSteadyStateError(SolverError):
    """The Liouvillian kernel is not one-dimensional."""


class SteadyStateError(SolverError):
    """Period-averaged current did not converge within the time budget.

    The partial :class:`~amtransport.lindblad.CurrentTrace` is attached as
    ``trace``.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
