"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid system configuration or config file (CLI exit code 2)."""


class ConvergenceError(RuntimeError):
    """A fixed-point solver exhausted max_iter without reaching tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InfeasibleError(RuntimeError):
    """Power allocation is infeasible at the requested operating point (CLI exit code 3)."""


class ConditioningError(RuntimeError):
    """A matrix required by the design is numerically singular."""
