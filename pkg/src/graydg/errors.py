"""Exception types shared across the library."""


class InvalidParameterError(ValueError):
    """An argument violates an operation's contract."""


class ConfigurationError(RuntimeError):
    """A problem setup is inconsistent or incomplete."""


class SolverFailure(RuntimeError):
    """A linear or nonlinear solve did not converge."""


class PicardNonConvergence(SolverFailure):
    """The outer fixed-point loop hit its iteration cap.

    Carries the residual history so callers can log or inspect the
    divergence pattern.
    """

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class NewtonFailure(SolverFailure):
    """The local scalar root solve stagnated and bracketing failed."""
