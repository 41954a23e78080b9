"""Exception hierarchy shared by all modules."""


class VarmechError(Exception):
    """Base class for errors raised by varmech."""


class DimensionError(VarmechError, ValueError):
    """Operands live in spaces of different dimension."""


class DomainError(VarmechError, ValueError):
    """A time or point lies outside the domain of a curve or field."""


class EvaluationError(VarmechError, ArithmeticError):
    """A field evaluated to a non-finite value (typically division by zero)."""


class QuadratureError(VarmechError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class ConvergenceError(VarmechError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None, iterate=None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate


class SingularMatrixError(ConvergenceError):
    """Newton iteration met a singular (or numerically singular) Jacobian."""


class HyperregularityError(SingularMatrixError):
    """The Legendre map could not be inverted at the requested point."""


class ExpressionError(VarmechError, ValueError):
    """Lexical, syntactic or binding error in an expression source."""

    def __init__(self, message, line=None, column=None):
        where = f" at line {line}, column {column}" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class ConfigError(VarmechError, ValueError):
    """A system configuration violates the schema."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class InputFormatError(VarmechError, ValueError):
    """A data file (trajectory CSV, point table, config) is malformed."""
