"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FrontSpeedError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(FrontSpeedError, ValueError):
    """Malformed coefficient expression or config file."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ConfigError(FrontSpeedError, ValueError):
    """Structurally invalid model config (missing keys, gaps in intervals, ...)."""


class DomainError(FrontSpeedError, ArithmeticError):
    """Evaluation produced a non-finite value (log/sqrt of a negative, division by zero)."""

    def __init__(self, message: str, x: float | None = None):
        self.x = x
        if x is not None:
            message = f"{message} at x={x!r}"
        super().__init__(message)


class HypothesisError(FrontSpeedError):
    """A structural hypothesis on the model coefficients does not hold."""

    def __init__(self, hypothesis: str, message: str, witness: float | None = None):
        self.hypothesis = hypothesis
        self.witness = witness
        text = f"({hypothesis}) {message}"
        if witness is not None:
            text += f" [witness xi={witness!r}]"
        super().__init__(text)


class QuadratureError(FrontSpeedError):
    """Adaptive quadrature failed to converge within its panel budget."""

    def __init__(self, message: str, value: float = float("nan"), error: float = float("inf")):
        self.value = value
        self.error = error
        super().__init__(message)


class NumericalError(FrontSpeedError):
    """Integrator, extrapolation or inversion failure."""

    def __init__(self, message: str, location: float | None = None):
        self.location = location
        if location is not None:
            message = f"{message} near xi={location!r}"
        super().__init__(message)


class RegularizationError(FrontSpeedError, ValueError):
    """Invalid epsilon or point set for an epsilon-regularization."""


class RefusedError(FrontSpeedError):
    """The requested computation is not justified for this model."""


class DualCaseError(RefusedError):
    """g(0+) <= 0: flip the signs of g and c first."""
