"""Exception hierarchy. CLI exit codes are keyed off these categories."""


class AgcError(Exception):
    exit_code = 1


class DimensionError(AgcError, ValueError):
    """Operand shapes do not conform."""


class ValidationError(AgcError, ValueError):
    """A value violates a documented invariant."""


class SingularMatrixError(AgcError, ArithmeticError):
    exit_code = 3


class IntegrationError(AgcError, ArithmeticError):
    """Non-finite derivative encountered while time stepping."""

    exit_code = 3

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SolverError(AgcError, RuntimeError):
    exit_code = 3

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(AgcError):
    exit_code = 2


class OutputError(AgcError, OSError):
    exit_code = 4
