"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function or model."""


class NumericRangeError(ArithmeticError):
    """The result cannot be represented in double precision (e.g. an outage
    probability that underflows), so no value is returned."""


class QuadratureError(ArithmeticError):
    """Gauss-Legendre refinement did not reach the requested agreement."""


class InsufficientSamplesError(ValueError):
    """Too few Monte-Carlo samples support an empirical estimate."""
