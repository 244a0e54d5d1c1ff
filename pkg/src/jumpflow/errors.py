"""Exception hierarchy shared by all jumpflow modules."""


class JumpflowError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(JumpflowError, ValueError):
    """Invalid configuration or invalid distribution/operator parameters."""


class DomainError(JumpflowError, ValueError):
    """An argument lies outside the domain of an operation (bad time, bad grid)."""


class NumericError(JumpflowError, ArithmeticError):
    """A non-finite value showed up where a finite one is required."""


class SolverError(JumpflowError, RuntimeError):
    """The resolvent solver did not converge.

    ``trace`` holds one ``(iteration, residual_inf, step_length)`` tuple per
    Newton iteration so callers can persist it.
    """

    def __init__(self, message, trace=(), residual=float("nan")):
        super().__init__(message)
        self.trace = list(trace)
        self.residual = residual
