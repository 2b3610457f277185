"""Exception types shared across the package."""


class StirapError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(StirapError, ValueError):
    """A configuration or input value violates a documented invariant."""


class DegenerateInputError(StirapError, ValueError):
    """An eigenvector formula was evaluated at a degenerate configuration."""


class SingularDenominatorError(StirapError, ZeroDivisionError):
    """A closed-form ratio has a vanishing denominator.

    ``factor`` names the expression that vanished.
    """

    def __init__(self, message: str, factor: str):
        super().__init__(message)
        self.factor = factor


class IntegrationError(StirapError, RuntimeError):
    """Time propagation failed.  ``xi`` locates the failure."""

    def __init__(self, message: str, xi: float):
        super().__init__(f"{message} (at xi={xi:.6g})")
        self.xi = xi


class OracleConvergenceError(StirapError, RuntimeError):
    """The dense eigensolver did not reach the required residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual
