"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class NumericError(ArithmeticError):
    """A computed quantity violates an analytic guarantee beyond roundoff."""


class NumericWarning(RuntimeWarning):
    """A numerical method did not meet its convergence target."""
